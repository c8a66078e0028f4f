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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spml/common.hpp"

namespace spml {

enum class SplitTag { Train, Val, Test };

std::string to_string(SplitTag tag);

struct Dataset {
  MatrixXd features;              // N x D
  GroundTruthMatrix ground_truth;  // N x C in {-1, +1}
  AnnotationMatrix annotations;    // N x C in {-1, 0, +1}
  SplitTag split = SplitTag::Train;

  Index size() const { return features.rows(); }
  Index feature_dim() const { return features.cols(); }
  Index class_count() const { return ground_truth.cols(); }

  /// Checks shapes and label alphabets, and that no annotation contradicts
  /// ground truth when `strict_annotations` is set.
  void validate(bool strict_annotations = true) const;

  /// Rows in the given order, same split tag.
  Dataset subset(const std::vector<Index>& rows) const;
};

/// Synthetic multi-label data: every class owns a Gaussian prototype vector
/// and each sample's features are the sum of its positive classes'
/// prototypes plus isotropic noise. Each sample has 1 + Poisson(mean - 1)
/// distinct positive classes (capped at C).
struct SyntheticConfig {
  Index sample_count = 2000;
  Index feature_dim = 20;
  Index class_count = 10;
  double positives_per_sample_mean = 1.5;
  double class_prototype_spread = 1.0;
  double noise_sigma = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

Dataset generate_synthetic(const SyntheticConfig& cfg);

/// Keeps exactly one uniformly chosen positive per row; everything else
/// becomes unannotated.
AnnotationMatrix mask_single_positive(const GroundTruthMatrix& gt, std::uint64_t seed);

/// Sets round(drop_fraction * C) uniformly chosen entries of every row to 0.
AnnotationMatrix mask_missing_labels(const GroundTruthMatrix& gt, double drop_fraction,
                                     std::uint64_t seed);

/// Disjoint row partition; the second split holds round(val_fraction * N)
/// rows and keeps full annotations (annotations = ground truth).
std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, double val_fraction,
                                            std::uint64_t seed);

/// Row indices chosen for the validation side of split_train_val.
std::vector<Index> validation_rows(Index n, double val_fraction, std::uint64_t seed);

/// Reads comma-separated feature / label files. Ground truth on disk is
/// {0, 1}; annotations on disk are {-1, 0, 1}. Without an annotations file,
/// annotations equal ground truth.
Dataset load_dataset(const std::string& features_path, const std::string& gt_path,
                     const std::optional<std::string>& annotations_path = std::nullopt);

void save_features(const MatrixXd& features, const std::string& path);
void save_ground_truth(const GroundTruthMatrix& gt, const std::string& path);
void save_annotations(const AnnotationMatrix& ann, const std::string& path);

MatrixXd read_feature_csv(const std::string& path);
/// Reads an integer matrix; `allowed` lists the legal on-disk values.
LabelMatrix read_label_csv(const std::string& path, const std::vector<int>& allowed);

struct AnnotationStats {
  std::vector<Index> annotated_positive;
  std::vector<Index> unannotated_positive;
  std::vector<Index> unannotated_negative;
  std::vector<Index> annotated_negative;
  /// Share of each class's unannotated pool that is negative (resp. positive);
  /// both are 0 for a class with an empty pool.
  std::vector<double> unannotated_negative_proportion;
  std::vector<double> unannotated_positive_proportion;

  Index class_count() const { return static_cast<Index>(annotated_positive.size()); }
  /// Pooled over all classes: unannotated negatives / unannotated labels.
  double pooled_unannotated_negative_proportion() const;
};

AnnotationStats annotation_stats(const AnnotationMatrix& ann, const GroundTruthMatrix& gt);

void write_annotation_stats_csv(const AnnotationStats& stats, const std::string& path);

}  // namespace spml
