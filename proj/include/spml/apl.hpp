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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spml/common.hpp"
#include "spml/soft_labels.hpp"

namespace spml {

/// Asymmetric pseudo-labeling schedule. theta is the percentage of each
/// class's unannotated pool that may become negative pseudo-labels over the
/// whole run; it is spread evenly across the epochs after warm-up.
struct AplConfig {
  int total_epochs = 10;
  int warmup_epochs = 5;
  double theta = 90.0;
  /// Ablation: record s = 0 instead of the model probability.
  bool hard_labels = false;
  /// Ablation: also promote the highest-probability entries to +1.
  bool enable_positive_pl = false;
  double positive_proportion = 10.0;

  void validate() const;
};

/// Per-epoch percentage theta / (T_t - T_w).
double plan_schedule(const AplConfig& cfg);

/// floor(percent / 100 * pool_size), robust to representation error.
Index per_epoch_count(double percent, Index pool_size);

struct PseudoLabel {
  int epoch;
  Index sample;
  Index cls;
  double soft_label;
  int polarity;  // -1 or +1
};

using PseudoLabelBatch = std::vector<PseudoLabel>;

/// Positions (into `pool`) of the `count` lowest (or highest) probabilities;
/// ties go to the lower sample index. Result is in selection order.
std::vector<Index> select_extreme(std::span<const Index> pool, const VectorXd& probs_column,
                                  Index count, bool lowest);

class AplState {
 public:
  /// Captures per-class pools {n : ann(n, c) = 0} from `ann`. Construct at
  /// the end of warm-up (annotations do not change before then).
  AplState(AplConfig cfg, const AnnotationMatrix& ann);

  const AplConfig& config() const { return cfg_; }
  Index class_count() const { return static_cast<Index>(pools_.size()); }
  Index pool_size(Index cls) const { return static_cast<Index>(pools_.at(cls).size()); }
  Index original_pool_size(Index cls) const { return original_sizes_.at(cls); }
  Index negative_quota(Index cls) const;
  Index positive_quota(Index cls) const;

  /// Removes and returns the lowest-probability quota of class `cls`.
  PseudoLabelBatch select_negatives(Index cls, const VectorXd& probs_column);
  /// Ablation mirror: highest-probability entries become hard +1 labels.
  PseudoLabelBatch select_positives(Index cls, const VectorXd& probs_column);

  /// Runs selection for every class at epoch index `epoch` (the number of
  /// completed epochs), writes -1 / +1 into `ann` and soft labels into
  /// `soft`. A second call for the same epoch is a no-op.
  PseudoLabelBatch apply_epoch(int epoch, const MatrixXd& probs, AnnotationMatrix& ann,
                               SoftLabelStore& soft);

  const std::vector<PseudoLabel>& ledger() const { return ledger_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::optional<int> last_applied_epoch() const { return last_epoch_; }

 private:
  PseudoLabelBatch take(Index cls, const VectorXd& probs_column, Index quota, bool lowest);

  AplConfig cfg_;
  std::vector<std::vector<Index>> pools_;
  std::vector<Index> original_sizes_;
  std::vector<PseudoLabel> ledger_;
  std::vector<std::string> warnings_;
  std::optional<int> last_epoch_;
  int current_epoch_ = 0;
  Index sample_count_ = 0;
};

/// Fraction of ledger entries of the given polarity that agree with ground
/// truth. Throws StateError when no such entry exists.
double pseudo_label_precision(std::span<const PseudoLabel> ledger, const GroundTruthMatrix& gt,
                              int polarity = kNegative);

/// epoch,sample,class,soft_label,polarity[,ground_truth]
void write_audit_csv(std::span<const PseudoLabel> ledger, const GroundTruthMatrix* gt,
                     const std::string& path);
std::vector<PseudoLabel> read_audit_csv(const std::string& path);

}  // namespace spml
