// Copyright 2026 The SPML Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spml/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace spml {

void TrainConfig::validate() const {
  loss.validate();
  penalty.validate();
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("learning rate must be > 0");
  if (total_epochs < 1) throw ConfigError("total epochs must be >= 1");
  if (hidden_size < 0) throw ConfigError("hidden size must be >= 0");
  if ((loss.tag == LossTag::EM_APL) != apl.has_value())
    throw ConfigError("pseudo-labeling configuration is required by, and only by, em-apl");
  if (apl) {
    apl->validate();
    if (apl->total_epochs != total_epochs)
      throw ConfigError("pseudo-labeling total epochs must equal training epochs");
  }
  if (threshold && !(*threshold > 0.0 && *threshold < 1.0))
    throw ConfigError("F1 threshold must lie in (0, 1)");
}

double TrainConfig::eval_threshold() const {
  if (threshold) return *threshold;
  return (loss.tag == LossTag::EM || loss.tag == LossTag::EM_APL) ? 0.75 : 0.5;
}

namespace {

double safe_mean(double sum, Index count) {
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

RunResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set) {
  cfg.validate();
  train_set.validate(false);
  val_set.validate(true);
  if (train_set.feature_dim() != val_set.feature_dim() ||
      train_set.class_count() != val_set.class_count())
    throw DataError("train: training and validation splits differ in shape");
  require_alphabet(train_set.annotations, cfg.loss.accepts_negatives(), true, true,
                   "training annotations for loss '" + std::string(to_string(cfg.loss.tag)) + "'");

  const Index n = train_set.size();
  auto model = Mlp<double>::init(train_set.feature_dim(), cfg.hidden_size,
                                 train_set.class_count(), derive_seed(cfg.seed, 1));
  auto adam = AdamState<double>::for_model(model, cfg.learning_rate);
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 2));

  AnnotationMatrix ann = train_set.annotations;
  SoftLabelStore soft;
  // Annotated negatives (missing-label data) train as hard targets s = 0.
  if (cfg.loss.tag == LossTag::EM_APL)
    for (Index j = 0; j < ann.cols(); ++j)
      for (Index i = 0; i < ann.rows(); ++i)
        if (ann(i, j) == kNegative) soft.set(i, j, 0.0);
  std::optional<AplState> apl;

  RunResult result;
  {
    const auto init = compute_loss(cfg.loss.tag == LossTag::EM_APL && soft.empty()
                                       ? LossKind{.tag = LossTag::EM, .alpha = cfg.loss.alpha}
                                       : cfg.loss,
                                   model.forward(train_set.features), ann, &soft);
    result.initial_positive_loss = safe_mean(init.terms.positive, init.terms.positive_count);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  EarlyStopper stopper(cfg.early_stopping);
  result.model = model;

  for (int epoch = 0; epoch < cfg.total_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch + 1;

    if (cfg.apl && epoch >= cfg.apl->warmup_epochs) {
      if (!apl) apl.emplace(*cfg.apl, ann);
      const MatrixXd probs = sigmoid(model.forward(train_set.features));
      rec.pseudo_labels_assigned =
          static_cast<Index>(apl->apply_epoch(epoch, probs, ann, soft).size());
    }
    LossKind kind = cfg.loss;
    if (kind.tag == LossTag::EM_APL && soft.empty()) kind.tag = LossTag::EM;  // warm-up

    std::shuffle(order.begin(), order.end(), shuffle_rng);
    LossTermSums sums;
    for (Index begin = 0, step = 0; begin < n; begin += cfg.batch_size, ++step) {
      const Index end = std::min(n, begin + cfg.batch_size);
      const std::vector<Index> rows(order.begin() + begin, order.begin() + end);
      const MatrixXd x = train_set.features(rows, Eigen::all);
      const AnnotationMatrix y = ann(rows, Eigen::all);
      const SoftLabelStore batch_soft = soft.gather(rows);

      const auto out = compute_loss(kind, model.forward(x), y, &batch_soft);
      const double total = out.scalar_loss + penalty_value(cfg.penalty, model);
      if (!std::isfinite(total))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           ", step " + std::to_string(step));
      sums.positive += out.terms.positive;
      sums.positive_count += out.terms.positive_count;
      sums.unannotated += out.terms.unannotated;
      sums.unannotated_count += out.terms.unannotated_count;
      sums.pseudo += out.terms.pseudo;
      sums.pseudo_count += out.terms.pseudo_count;

      auto grads = model.backward(x, out.logit_gradient);
      add_penalty_gradient(cfg.penalty, model, grads);
      adam_step(adam, model, grads);
    }
    rec.positive_loss = safe_mean(sums.positive, sums.positive_count);
    rec.unannotated_loss = safe_mean(sums.unannotated, sums.unannotated_count);
    rec.pseudo_loss = safe_mean(sums.pseudo, sums.pseudo_count);
    rec.val_map = mean_ap(sigmoid(model.forward(val_set.features)), val_set.ground_truth).mean;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(rec);

    if (!stopper.observe(rec.epoch, rec.val_map)) {
      result.early_stopped = true;
      break;
    }
    if (stopper.improved()) {
      result.model = model;
      result.best_epoch = rec.epoch;
    }
  }

  if (apl) {
    result.ledger = apl->ledger();
    result.warnings = apl->warnings();
    const auto has = [&](int polarity) {
      return std::any_of(result.ledger.begin(), result.ledger.end(),
                         [&](const PseudoLabel& pl) { return pl.polarity == polarity; });
    };
    if (has(kNegative))
      result.negative_precision = pseudo_label_precision(result.ledger, train_set.ground_truth, kNegative);
    if (has(kPositive))
      result.positive_precision = pseudo_label_precision(result.ledger, train_set.ground_truth, kPositive);
  }
  return result;
}

bool EarlyStopper::observe(int epoch, double val_map) {
  improved_ = false;
  if (enabled_ && val_map < prev_) {
    stopped_ = true;
    return false;
  }
  if (val_map >= best_) {
    best_ = val_map;
    best_epoch_ = epoch;
    improved_ = true;
  }
  prev_ = val_map;
  return true;
}

std::vector<double> loss_term_trace(std::span<const EpochRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.positive_loss);
  return out;
}

MetricsReport evaluate(const Mlp<double>& model, const Dataset& ds, double threshold) {
  const MatrixXd logits = model.forward(ds.features);
  const MatrixXd probs = sigmoid(logits);
  MetricsReport report;
  report.ap = mean_ap(probs, ds.ground_truth);
  report.f1 = f1_scores(probs, ds.ground_truth, threshold);
  if (contains_value(ds.annotations, kUnannotated))
    report.distinguishability = distinguishability_report(logits, ds.annotations, ds.ground_truth);
  return report;
}

GridResult grid_search(std::span<const TrainConfig> cfgs, const Dataset& train_set,
                       const Dataset& val_set, int jobs) {
  if (cfgs.empty()) throw ConfigError("grid_search: no configurations");
  std::vector<GridEntry> entries(cfgs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cfgs.size(); k = next++) {
      GridEntry& e = entries[k];
      e.config_index = k;
      try {
        const auto run = train(cfgs[k], train_set, val_set);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& r : run.epochs) best = std::max(best, r.val_map);
        e.best_val_map = best;
      } catch (const Error& err) {
        e.failure = err.what();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(cfgs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::stable_sort(entries.begin(), entries.end(), [](const GridEntry& a, const GridEntry& b) {
    if (a.best_val_map.has_value() != b.best_val_map.has_value()) return a.best_val_map.has_value();
    if (!a.best_val_map) return false;
    return *a.best_val_map > *b.best_val_map;
  });
  GridResult result;
  result.best = entries.front().config_index;
  result.leaderboard = std::move(entries);
  return result;
}

}  // namespace spml
