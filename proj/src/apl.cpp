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

#include "spml/apl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace spml {

void AplConfig::validate() const {
  if (warmup_epochs < 0 || warmup_epochs >= total_epochs)
    throw ConfigError("apl: warm-up epochs must satisfy 0 <= T_w < T_t");
  if (!(theta > 0.0 && theta <= 100.0)) throw ConfigError("apl: theta must lie in (0, 100]");
  if (enable_positive_pl && !(positive_proportion > 0.0 && positive_proportion <= 100.0))
    throw ConfigError("apl: positive proportion must lie in (0, 100]");
}

double plan_schedule(const AplConfig& cfg) {
  cfg.validate();
  return cfg.theta / static_cast<double>(cfg.total_epochs - cfg.warmup_epochs);
}

Index per_epoch_count(double percent, Index pool_size) {
  if (percent < 0.0 || pool_size < 0) throw ConfigError("per_epoch_count: negative input");
  // The epsilon absorbs representation error, e.g. 18% of 1000 must be 180.
  return static_cast<Index>(std::floor(percent * static_cast<double>(pool_size) / 100.0 + 1e-9));
}

std::vector<Index> select_extreme(std::span<const Index> pool, const VectorXd& probs_column,
                                  Index count, bool lowest) {
  std::vector<Index> positions(pool.size());
  std::iota(positions.begin(), positions.end(), Index{0});
  // `pool` is kept in ascending sample order, so a stable sort breaks ties
  // toward the lower sample index.
  std::stable_sort(positions.begin(), positions.end(), [&](Index a, Index b) {
    const double pa = probs_column(pool[a]), pb = probs_column(pool[b]);
    return lowest ? pa < pb : pa > pb;
  });
  positions.resize(static_cast<std::size_t>(std::clamp<Index>(count, 0, static_cast<Index>(pool.size()))));
  return positions;
}

AplState::AplState(AplConfig cfg, const AnnotationMatrix& ann) : cfg_(cfg) {
  cfg_.validate();
  require_alphabet(ann, true, true, true, "apl annotations");
  pools_.resize(static_cast<std::size_t>(ann.cols()));
  original_sizes_.resize(static_cast<std::size_t>(ann.cols()));
  for (Index c = 0; c < ann.cols(); ++c) {
    for (Index n = 0; n < ann.rows(); ++n)
      if (ann(n, c) == kUnannotated) pools_[c].push_back(n);
    original_sizes_[c] = static_cast<Index>(pools_[c].size());
  }
  sample_count_ = ann.rows();
}

Index AplState::negative_quota(Index cls) const {
  return per_epoch_count(plan_schedule(cfg_), original_sizes_.at(cls));
}

Index AplState::positive_quota(Index cls) const {
  const double percent =
      cfg_.positive_proportion / static_cast<double>(cfg_.total_epochs - cfg_.warmup_epochs);
  return per_epoch_count(percent, original_sizes_.at(cls));
}

PseudoLabelBatch AplState::take(Index cls, const VectorXd& probs_column, Index quota, bool lowest) {
  if (probs_column.size() != sample_count_)
    throw ContractError("apl: probability column has " + std::to_string(probs_column.size()) +
                        " rows, expected " + std::to_string(sample_count_));
  auto& pool = pools_.at(cls);
  if (quota > static_cast<Index>(pool.size())) {
    warnings_.push_back("epoch " + std::to_string(current_epoch_) + ", class " +
                        std::to_string(cls) + ": requested " + std::to_string(quota) +
                        " pseudo-labels but only " + std::to_string(pool.size()) + " remain");
  }
  const auto picked = select_extreme(pool, probs_column, quota, lowest);
  PseudoLabelBatch batch;
  batch.reserve(picked.size());
  std::vector<char> drop(pool.size(), 0);
  for (Index pos : picked) {
    const Index n = pool[pos];
    const double p = probs_column(n);
    double s = p;
    if (!lowest) {
      s = 1.0;
    } else if (cfg_.hard_labels) {
      s = 0.0;
    }
    batch.push_back({current_epoch_, n, cls, s, lowest ? kNegative : kPositive});
    drop[pos] = 1;
  }
  std::size_t w = 0;
  for (std::size_t k = 0; k < pool.size(); ++k)
    if (!drop[k]) pool[w++] = pool[k];
  pool.resize(w);
  ledger_.insert(ledger_.end(), batch.begin(), batch.end());
  return batch;
}

PseudoLabelBatch AplState::select_negatives(Index cls, const VectorXd& probs_column) {
  return take(cls, probs_column, negative_quota(cls), true);
}

PseudoLabelBatch AplState::select_positives(Index cls, const VectorXd& probs_column) {
  if (!cfg_.enable_positive_pl) throw ConfigError("apl: positive pseudo-labeling is disabled");
  return take(cls, probs_column, positive_quota(cls), false);
}

PseudoLabelBatch AplState::apply_epoch(int epoch, const MatrixXd& probs, AnnotationMatrix& ann,
                                       SoftLabelStore& soft) {
  if (epoch < cfg_.warmup_epochs)
    throw SequencingError("apl: epoch " + std::to_string(epoch) + " is inside warm-up (T_w = " +
                          std::to_string(cfg_.warmup_epochs) + ")");
  if (epoch >= cfg_.total_epochs)
    throw SequencingError("apl: epoch " + std::to_string(epoch) + " is past the last epoch");
  if (last_epoch_ && epoch == *last_epoch_) return {};
  if (last_epoch_ && epoch < *last_epoch_)
    throw SequencingError("apl: epoch " + std::to_string(epoch) + " precedes epoch " +
                          std::to_string(*last_epoch_));
  if (probs.rows() != sample_count_ || probs.cols() != class_count() ||
      ann.rows() != sample_count_ || ann.cols() != class_count())
    throw ContractError("apl: probability / annotation shape mismatch");

  current_epoch_ = epoch;
  PseudoLabelBatch assigned;
  for (Index c = 0; c < class_count(); ++c) {
    const VectorXd column = probs.col(c);
    auto batch = select_negatives(c, column);
    if (cfg_.enable_positive_pl) {
      auto pos = select_positives(c, column);
      batch.insert(batch.end(), pos.begin(), pos.end());
    }
    for (const auto& pl : batch) {
      if (ann(pl.sample, pl.cls) != kUnannotated)
        throw StateError("apl: (" + std::to_string(pl.sample) + ", " + std::to_string(pl.cls) +
                         ") is already annotated");
      ann(pl.sample, pl.cls) = pl.polarity;
      if (pl.polarity == kNegative) soft.set(pl.sample, pl.cls, pl.soft_label);
    }
    assigned.insert(assigned.end(), batch.begin(), batch.end());
  }
  last_epoch_ = epoch;
  return assigned;
}

double pseudo_label_precision(std::span<const PseudoLabel> ledger, const GroundTruthMatrix& gt,
                              int polarity) {
  Index total = 0, correct = 0;
  for (const auto& pl : ledger) {
    if (pl.polarity != polarity) continue;
    ++total;
    correct += gt(pl.sample, pl.cls) == polarity;
  }
  if (total == 0) throw StateError("pseudo_label_precision: no pseudo-labels of that polarity");
  return static_cast<double>(correct) / static_cast<double>(total);
}

void write_audit_csv(std::span<const PseudoLabel> ledger, const GroundTruthMatrix* gt,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "epoch,sample,class,soft_label,polarity" << (gt ? ",ground_truth" : "") << '\n';
  char buf[32];
  for (const auto& pl : ledger) {
    std::snprintf(buf, sizeof(buf), "%.17g", pl.soft_label);
    os << pl.epoch << ',' << pl.sample << ',' << pl.cls << ',' << buf << ',' << pl.polarity;
    if (gt) os << ',' << (*gt)(pl.sample, pl.cls);
    os << '\n';
  }
}

std::vector<PseudoLabel> read_audit_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  std::string line;
  std::getline(is, line);  // header
  std::vector<PseudoLabel> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    PseudoLabel pl{};
    char comma = 0;
    if (!(ss >> pl.epoch >> comma >> pl.sample >> comma >> pl.cls >> comma >> pl.soft_label >>
          comma >> pl.polarity))
      throw ParseError(path + ": malformed audit row '" + line + "'");
    out.push_back(pl);
  }
  return out;
}

}  // namespace spml
