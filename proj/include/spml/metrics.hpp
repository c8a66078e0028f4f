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
#include <string>
#include <vector>

#include "spml/common.hpp"

namespace spml {

/// Non-interpolated (all-points) average precision. Items are ranked by
/// descending score, ties by ascending index. Returns nullopt when there
/// are no positive labels.
std::optional<double> average_precision(const VectorXd& scores, const Eigen::VectorXi& labels);

struct MeanApResult {
  std::vector<double> per_class;  // NaN for excluded classes
  std::vector<Index> excluded;    // classes without positives
  double mean = 0.0;
};

/// Mean of per-class AP over classes that have at least one positive.
MeanApResult mean_ap(const MatrixXd& probs, const GroundTruthMatrix& gt);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
  double threshold = 0.5;
};

/// Predictions are 1[f >= threshold]. Undefined per-class F1 counts as 0.
F1Scores f1_scores(const MatrixXd& probs, const GroundTruthMatrix& gt, double threshold);

/// Order-1 Wasserstein distance between two empirical distributions,
/// integrated exactly over the merged quantile grid.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

/// One point per distinct score, highest threshold first.
std::vector<PrPoint> precision_recall_curve(const VectorXd& scores, const Eigen::VectorXi& labels);

struct LogitMagnitudeSummary {
  double annotated_positive = 0.0;
  double unannotated_positive = 0.0;
  double unannotated_negative = 0.0;
};

struct DistinguishabilityReport {
  std::vector<double> per_class;  // NaN where a group is empty
  std::vector<Index> skipped;     // classes with an empty group
  double mean = 0.0;              // over non-skipped classes
  LogitMagnitudeSummary logit_medians;
};

/// Per class, W1 between predicted probabilities of unannotated-positive and
/// unannotated-negative labels, plus medians of |logit| per label group.
DistinguishabilityReport distinguishability_report(const MatrixXd& logits,
                                                   const AnnotationMatrix& ann,
                                                   const GroundTruthMatrix& gt);

struct MetricsReport {
  MeanApResult ap;
  F1Scores f1;
  std::optional<DistinguishabilityReport> distinguishability;
};

void write_metrics_report(const MetricsReport& report, const std::string& path);
void write_per_class_csv(const MetricsReport& report, const std::string& path);

double median(std::vector<double> values);

}  // namespace spml
