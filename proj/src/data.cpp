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

#include "spml/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace spml {

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "unknown";
}

void Dataset::validate(bool strict_annotations) const {
  if (ground_truth.rows() != features.rows() || annotations.rows() != features.rows())
    throw DataError("dataset: feature and label row counts differ");
  if (annotations.cols() != ground_truth.cols())
    throw DataError("dataset: annotation and ground-truth class counts differ");
  require_alphabet(ground_truth, true, false, true, "ground truth");
  require_alphabet(annotations, true, true, true, "annotations");
  if (!strict_annotations) return;
  for (Index j = 0; j < annotations.cols(); ++j)
    for (Index i = 0; i < annotations.rows(); ++i)
      if (annotations(i, j) != kUnannotated && annotations(i, j) != ground_truth(i, j))
        throw DataError("dataset: annotation contradicts ground truth at row " +
                        std::to_string(i) + ", column " + std::to_string(j));
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.features = features(rows, Eigen::all);
  out.ground_truth = ground_truth(rows, Eigen::all);
  out.annotations = annotations(rows, Eigen::all);
  out.split = split;
  return out;
}

void SyntheticConfig::validate() const {
  if (sample_count < 1 || feature_dim < 1 || class_count < 1)
    throw ConfigError("synthetic: sample, feature and class counts must be >= 1");
  if (!(positives_per_sample_mean > 0)) throw ConfigError("synthetic: positives mean must be > 0");
  if (!(class_prototype_spread > 0)) throw ConfigError("synthetic: prototype spread must be > 0");
  if (!(noise_sigma >= 0)) throw ConfigError("synthetic: noise sigma must be >= 0");
}

namespace {

// Independent reproducible stream per (seed, purpose).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// First `k` entries of `items` become a uniform random k-subset.
void partial_shuffle(std::vector<Index>& items, Index k, std::mt19937_64& rng) {
  const Index n = static_cast<Index>(items.size());
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const Index n = cfg.sample_count, d = cfg.feature_dim, c = cfg.class_count;
  auto proto_rng = make_stream(cfg.seed, 1);
  auto sample_rng = make_stream(cfg.seed, 2);

  std::normal_distribution<double> proto_dist(0.0, cfg.class_prototype_spread);
  MatrixXd prototypes(c, d);
  for (Index i = 0; i < c; ++i)
    for (Index j = 0; j < d; ++j) prototypes(i, j) = proto_dist(proto_rng);

  const double extra_mean = cfg.positives_per_sample_mean - 1.0;
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  ds.features.resize(n, d);
  ds.ground_truth = GroundTruthMatrix::Constant(n, c, kNegative);
  std::vector<Index> classes(static_cast<std::size_t>(c));
  for (Index i = 0; i < n; ++i) {
    Index k = 1;
    if (extra_mean > 0) {
      std::poisson_distribution<Index> extra(extra_mean);
      k += extra(sample_rng);
    }
    k = std::min(k, c);
    std::iota(classes.begin(), classes.end(), Index{0});
    partial_shuffle(classes, k, sample_rng);
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(d);
    for (Index t = 0; t < k; ++t) {
      ds.ground_truth(i, classes[t]) = kPositive;
      x += prototypes.row(classes[t]);
    }
    for (Index j = 0; j < d; ++j) x(j) += cfg.noise_sigma * noise(sample_rng);
    ds.features.row(i) = x;
  }
  ds.annotations = ds.ground_truth;
  ds.split = SplitTag::Train;
  return ds;
}

AnnotationMatrix mask_single_positive(const GroundTruthMatrix& gt, std::uint64_t seed) {
  require_alphabet(gt, true, false, true, "ground truth");
  std::mt19937_64 rng(seed);
  AnnotationMatrix ann = AnnotationMatrix::Zero(gt.rows(), gt.cols());
  std::vector<Index> positives;
  for (Index i = 0; i < gt.rows(); ++i) {
    positives.clear();
    for (Index j = 0; j < gt.cols(); ++j)
      if (gt(i, j) == kPositive) positives.push_back(j);
    if (positives.empty())
      throw DataError("mask_single_positive: row " + std::to_string(i) + " has no positive label");
    std::uniform_int_distribution<std::size_t> pick(0, positives.size() - 1);
    ann(i, positives[pick(rng)]) = kPositive;
  }
  return ann;
}

AnnotationMatrix mask_missing_labels(const GroundTruthMatrix& gt, double drop_fraction,
                                     std::uint64_t seed) {
  if (!(drop_fraction >= 0.0 && drop_fraction < 1.0))
    throw ConfigError("mask_missing_labels: drop fraction must lie in [0, 1)");
  require_alphabet(gt, true, false, true, "ground truth");
  const Index c = gt.cols();
  const auto drop = static_cast<Index>(std::llround(drop_fraction * static_cast<double>(c)));
  std::mt19937_64 rng(seed);
  AnnotationMatrix ann = gt;
  std::vector<Index> classes(static_cast<std::size_t>(c));
  for (Index i = 0; i < gt.rows(); ++i) {
    std::iota(classes.begin(), classes.end(), Index{0});
    partial_shuffle(classes, drop, rng);
    for (Index t = 0; t < drop; ++t) ann(i, classes[t]) = kUnannotated;
  }
  return ann;
}

std::vector<Index> validation_rows(Index n, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("split: validation fraction must lie in (0, 1)");
  const auto count = static_cast<Index>(std::llround(val_fraction * static_cast<double>(n)));
  if (count < 1 || count >= n) throw ConfigError("split: a resulting split would be empty");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  partial_shuffle(order, count, rng);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& ds, double val_fraction,
                                            std::uint64_t seed) {
  const auto val_idx = validation_rows(ds.size(), val_fraction, seed);
  std::vector<Index> train_idx;
  train_idx.reserve(static_cast<std::size_t>(ds.size()) - val_idx.size());
  std::size_t k = 0;
  for (Index i = 0; i < ds.size(); ++i) {
    if (k < val_idx.size() && val_idx[k] == i) {
      ++k;
      continue;
    }
    train_idx.push_back(i);
  }
  Dataset train = ds.subset(train_idx);
  train.split = SplitTag::Train;
  Dataset val = ds.subset(val_idx);
  val.annotations = val.ground_truth;
  val.split = SplitTag::Val;
  return {std::move(train), std::move(val)};
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Reads every non-empty line; the first line is dropped as a header when
// any of its fields fails to parse.
template <typename T>
std::vector<std::vector<T>> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  std::vector<std::vector<T>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<T> row(fields.size());
    bool header = false;
    for (std::size_t j = 0; j < fields.size() && !header; ++j) {
      if (!parse_number(fields[j], row[j])) {
        header = rows.empty() && line_no == 1;
        if (header) break;
        throw ParseError(path + ": row " + std::to_string(rows.size()) + ", column " +
                         std::to_string(j) + ": cannot parse '" + fields[j] + "'");
      }
    }
    if (header) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path + ": row " + std::to_string(rows.size()) + " has " +
                       std::to_string(row.size()) + " columns, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Header row is `prefix`0, `prefix`1, ...
template <typename M>
void write_csv(const M& m, const std::string& path, char prefix) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << prefix << j;
  os << '\n';
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      if constexpr (std::is_floating_point_v<typename M::Scalar>) {
        std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
        os << buf;
      } else {
        os << m(i, j);
      }
    }
    os << '\n';
  }
  if (!os) throw DataError("failed writing " + path);
}

}  // namespace

MatrixXd read_feature_csv(const std::string& path) {
  const auto rows = read_csv<double>(path);
  if (rows.empty()) throw ParseError(path + ": no data rows");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

LabelMatrix read_label_csv(const std::string& path, const std::vector<int>& allowed) {
  const auto rows = read_csv<int>(path);
  if (rows.empty()) throw ParseError(path + ": no data rows");
  LabelMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const int v = rows[i][j];
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
        throw ParseError(path + ": row " + std::to_string(i) + ", column " + std::to_string(j) +
                         ": value " + std::to_string(v) + " is not a legal label");
      m(i, j) = v;
    }
  }
  return m;
}

Dataset load_dataset(const std::string& features_path, const std::string& gt_path,
                     const std::optional<std::string>& annotations_path) {
  Dataset ds;
  ds.features = read_feature_csv(features_path);
  const LabelMatrix gt01 = read_label_csv(gt_path, {0, 1});
  ds.ground_truth = (gt01.array() == 1).select(LabelMatrix::Constant(gt01.rows(), gt01.cols(), kPositive),
                                               LabelMatrix::Constant(gt01.rows(), gt01.cols(), kNegative));
  if (ds.ground_truth.rows() != ds.features.rows())
    throw ParseError(gt_path + ": " + std::to_string(ds.ground_truth.rows()) +
                     " rows but features have " + std::to_string(ds.features.rows()));
  if (annotations_path) {
    ds.annotations = read_label_csv(*annotations_path, {-1, 0, 1});
    if (ds.annotations.rows() != ds.ground_truth.rows() ||
        ds.annotations.cols() != ds.ground_truth.cols())
      throw ParseError(*annotations_path + ": shape " + std::to_string(ds.annotations.rows()) +
                       "x" + std::to_string(ds.annotations.cols()) +
                       " does not match ground truth " + std::to_string(ds.ground_truth.rows()) +
                       "x" + std::to_string(ds.ground_truth.cols()));
  } else {
    ds.annotations = ds.ground_truth;
  }
  return ds;
}

void save_features(const MatrixXd& features, const std::string& path) {
  write_csv(features, path, 'f');
}

void save_ground_truth(const GroundTruthMatrix& gt, const std::string& path) {
  const LabelMatrix gt01 = (gt.array() == kPositive).cast<int>();
  write_csv(gt01, path, 'c');
}

void save_annotations(const AnnotationMatrix& ann, const std::string& path) {
  write_csv(ann, path, 'c');
}

double AnnotationStats::pooled_unannotated_negative_proportion() const {
  Index neg = 0, pool = 0;
  for (Index c = 0; c < class_count(); ++c) {
    neg += unannotated_negative[c];
    pool += unannotated_negative[c] + unannotated_positive[c];
  }
  return pool == 0 ? 0.0 : static_cast<double>(neg) / static_cast<double>(pool);
}

AnnotationStats annotation_stats(const AnnotationMatrix& ann, const GroundTruthMatrix& gt) {
  if (ann.rows() != gt.rows() || ann.cols() != gt.cols())
    throw ContractError("annotation_stats: shape mismatch");
  const auto c = static_cast<std::size_t>(ann.cols());
  AnnotationStats s;
  s.annotated_positive.assign(c, 0);
  s.unannotated_positive.assign(c, 0);
  s.unannotated_negative.assign(c, 0);
  s.annotated_negative.assign(c, 0);
  s.unannotated_negative_proportion.assign(c, 0.0);
  s.unannotated_positive_proportion.assign(c, 0.0);
  for (Index j = 0; j < ann.cols(); ++j) {
    for (Index i = 0; i < ann.rows(); ++i) {
      const int a = ann(i, j);
      if (a == kPositive) {
        ++s.annotated_positive[j];
      } else if (a == kNegative) {
        ++s.annotated_negative[j];
      } else if (gt(i, j) == kPositive) {
        ++s.unannotated_positive[j];
      } else {
        ++s.unannotated_negative[j];
      }
    }
    const Index pool = s.unannotated_positive[j] + s.unannotated_negative[j];
    if (pool > 0) {
      s.unannotated_negative_proportion[j] =
          static_cast<double>(s.unannotated_negative[j]) / static_cast<double>(pool);
      s.unannotated_positive_proportion[j] =
          static_cast<double>(s.unannotated_positive[j]) / static_cast<double>(pool);
    }
  }
  return s;
}

void write_annotation_stats_csv(const AnnotationStats& stats, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "class,annotated_positive,unannotated_positive,unannotated_negative,annotated_negative,"
        "unannotated_negative_proportion,unannotated_positive_proportion\n";
  char buf[64];
  for (Index c = 0; c < stats.class_count(); ++c) {
    os << c << ',' << stats.annotated_positive[c] << ',' << stats.unannotated_positive[c] << ','
       << stats.unannotated_negative[c] << ',' << stats.annotated_negative[c];
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", stats.unannotated_negative_proportion[c],
                  stats.unannotated_positive_proportion[c]);
    os << buf;
  }
}

}  // namespace spml
