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

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spml/apl.hpp"
#include "spml/data.hpp"
#include "spml/losses.hpp"
#include "spml/metrics.hpp"
#include "spml/model.hpp"

namespace spml {

struct TrainConfig {
  LossKind loss;
  /// Present iff loss.tag == EM_APL. Its total_epochs mirrors total_epochs.
  std::optional<AplConfig> apl;
  Index batch_size = 8;
  double learning_rate = 1e-3;
  int total_epochs = 10;
  std::uint64_t seed = 0;
  Index hidden_size = 0;
  /// F1 threshold; defaults to 0.75 for the entropy-maximization family and
  /// 0.5 otherwise.
  std::optional<double> threshold;
  WeightPenalty penalty;
  bool early_stopping = true;

  void validate() const;
  double eval_threshold() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double positive_loss = 0.0;     // running mean over annotated positives
  double unannotated_loss = 0.0;  // running mean over unannotated labels
  double pseudo_loss = 0.0;       // running mean over pseudo-labels
  double val_map = 0.0;
  Index pseudo_labels_assigned = 0;
  double seconds = 0.0;
};

struct RunResult {
  Mlp<double> model;  // best-validation checkpoint
  int best_epoch = 0;
  std::vector<EpochRecord> epochs;
  /// Annotated-positive loss over the training set, before any update.
  double initial_positive_loss = 0.0;
  bool early_stopped = false;
  std::vector<PseudoLabel> ledger;
  std::optional<double> negative_precision;
  std::optional<double> positive_precision;
  std::vector<std::string> warnings;
  std::optional<MetricsReport> test_report;
};

/// Patience-1 rule on validation mAP: stop as soon as an epoch scores
/// strictly below the previous one; the best epoch (ties to the later one)
/// supplies the checkpoint.
class EarlyStopper {
 public:
  explicit EarlyStopper(bool enabled = true) : enabled_(enabled) {}

  /// Returns false when training should stop before keeping this epoch.
  bool observe(int epoch, double val_map);
  bool improved() const { return improved_; }
  bool stopped() const { return stopped_; }
  int best_epoch() const { return best_epoch_; }

 private:
  bool enabled_;
  double best_ = -std::numeric_limits<double>::infinity();
  double prev_ = -std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  bool improved_ = false;
  bool stopped_ = false;
};

/// Seeded epoch loop with warm-up, pseudo-labeling before each post-warm-up
/// epoch, and early stopping on validation mAP.
RunResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set);

/// Annotated-positive loss per epoch.
std::vector<double> loss_term_trace(std::span<const EpochRecord> records);

MetricsReport evaluate(const Mlp<double>& model, const Dataset& ds, double threshold);

struct GridEntry {
  std::size_t config_index = 0;
  std::optional<double> best_val_map;  // nullopt when the run failed
  std::string failure;
};

struct GridResult {
  std::size_t best = 0;  // index into the input configs
  std::vector<GridEntry> leaderboard;
};

/// Trains every config (up to `jobs` concurrently) and ranks by best
/// validation mAP; ties keep input order and failed runs sort last.
GridResult grid_search(std::span<const TrainConfig> cfgs, const Dataset& train_set,
                       const Dataset& val_set, int jobs = 1);

}  // namespace spml
