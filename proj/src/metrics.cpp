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

#include "spml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "spml/losses.hpp"

namespace spml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Ranking order: descending score, ties by ascending index.
std::vector<Index> ranking(const VectorXd& scores) {
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores(a) > scores(b); });
  return order;
}

void check_binary_labels(const VectorXd& scores, const Eigen::VectorXi& labels) {
  if (scores.size() != labels.size()) throw ContractError("metrics: scores and labels differ in length");
  for (Index i = 0; i < labels.size(); ++i)
    if (labels(i) != kPositive && labels(i) != kNegative)
      throw ContractError("metrics: label at index " + std::to_string(i) + " is not in {-1, +1}");
}

}  // namespace

std::optional<double> average_precision(const VectorXd& scores, const Eigen::VectorXi& labels) {
  check_binary_labels(scores, labels);
  const Index positives = (labels.array() == kPositive).count();
  if (positives == 0) return std::nullopt;
  double sum = 0.0;
  Index hits = 0, rank = 0;
  for (Index idx : ranking(scores)) {
    ++rank;
    if (labels(idx) == kPositive) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(positives);
}

std::vector<PrPoint> precision_recall_curve(const VectorXd& scores, const Eigen::VectorXi& labels) {
  check_binary_labels(scores, labels);
  const Index positives = (labels.array() == kPositive).count();
  const auto order = ranking(scores);
  std::vector<PrPoint> curve;
  Index hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels(order[k]) == kPositive) ++hits;
    const bool group_end = k + 1 == order.size() || scores(order[k + 1]) != scores(order[k]);
    if (!group_end) continue;
    const double n = static_cast<double>(k + 1);
    curve.push_back({scores(order[k]), static_cast<double>(hits) / n,
                     positives ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0});
  }
  return curve;
}

MeanApResult mean_ap(const MatrixXd& probs, const GroundTruthMatrix& gt) {
  if (probs.rows() != gt.rows() || probs.cols() != gt.cols())
    throw ContractError("mean_ap: shape mismatch");
  MeanApResult r;
  r.per_class.assign(static_cast<std::size_t>(gt.cols()), kNaN);
  double sum = 0.0;
  Index evaluable = 0;
  for (Index c = 0; c < gt.cols(); ++c) {
    const auto ap = average_precision(probs.col(c), gt.col(c));
    if (!ap) {
      r.excluded.push_back(c);
      continue;
    }
    r.per_class[c] = *ap;
    sum += *ap;
    ++evaluable;
  }
  if (evaluable == 0) throw DataError("mean_ap: no class has a positive label");
  r.mean = sum / static_cast<double>(evaluable);
  return r;
}

F1Scores f1_scores(const MatrixXd& probs, const GroundTruthMatrix& gt, double threshold) {
  if (probs.rows() != gt.rows() || probs.cols() != gt.cols())
    throw ContractError("f1_scores: shape mismatch");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("f1_scores: threshold outside (0, 1)");
  auto f1 = [](Index tp, Index fp, Index fn) {
    const Index denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  };
  Index tp_all = 0, fp_all = 0, fn_all = 0;
  double macro = 0.0;
  for (Index c = 0; c < gt.cols(); ++c) {
    Index tp = 0, fp = 0, fn = 0;
    for (Index i = 0; i < gt.rows(); ++i) {
      const bool predicted = probs(i, c) >= threshold;
      const bool actual = gt(i, c) == kPositive;
      tp += predicted && actual;
      fp += predicted && !actual;
      fn += !predicted && actual;
    }
    macro += f1(tp, fp, fn);
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  return {f1(tp_all, fp_all, fn_all), gt.cols() ? macro / static_cast<double>(gt.cols()) : 0.0,
          threshold};
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("wasserstein_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto n = a.size(), m = b.size();
  // Both quantile functions are step functions; walk the merged breakpoints
  // i/n and j/m, comparing them exactly as (i * m) vs (j * n).
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (i < n && j < m) {
    const auto lhs = (i + 1) * m, rhs = (j + 1) * n;
    const double next = lhs <= rhs ? static_cast<double>(i + 1) / static_cast<double>(n)
                                    : static_cast<double>(j + 1) / static_cast<double>(m);
    total += (next - u) * std::abs(a[i] - b[j]);
    u = next;
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return total;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

DistinguishabilityReport distinguishability_report(const MatrixXd& logits,
                                                   const AnnotationMatrix& ann,
                                                   const GroundTruthMatrix& gt) {
  if (logits.rows() != ann.rows() || logits.cols() != ann.cols() || ann.rows() != gt.rows() ||
      ann.cols() != gt.cols())
    throw ContractError("distinguishability_report: shape mismatch");
  const MatrixXd probs = sigmoid(logits);
  DistinguishabilityReport r;
  r.per_class.assign(static_cast<std::size_t>(gt.cols()), kNaN);
  std::vector<double> mag_ap, mag_up, mag_un;
  double sum = 0.0;
  Index counted = 0;
  for (Index c = 0; c < gt.cols(); ++c) {
    std::vector<double> up, un;
    for (Index i = 0; i < gt.rows(); ++i) {
      const double g = std::abs(logits(i, c));
      if (ann(i, c) == kPositive) {
        mag_ap.push_back(g);
      } else if (ann(i, c) == kUnannotated) {
        if (gt(i, c) == kPositive) {
          up.push_back(probs(i, c));
          mag_up.push_back(g);
        } else {
          un.push_back(probs(i, c));
          mag_un.push_back(g);
        }
      }
    }
    if (up.empty() || un.empty()) {
      r.skipped.push_back(c);
      continue;
    }
    r.per_class[c] = wasserstein_1d(std::move(up), std::move(un));
    sum += r.per_class[c];
    ++counted;
  }
  r.mean = counted ? sum / static_cast<double>(counted) : kNaN;
  r.logit_medians = {median(std::move(mag_ap)), median(std::move(mag_up)), median(std::move(mag_un))};
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_metrics_report(const MetricsReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "mean_ap=" << fmt(report.ap.mean) << '\n';
  os << "evaluable_classes=" << report.ap.per_class.size() - report.ap.excluded.size() << '\n';
  os << "excluded_classes=";
  for (std::size_t k = 0; k < report.ap.excluded.size(); ++k)
    os << (k ? " " : "") << report.ap.excluded[k];
  os << '\n';
  os << "threshold=" << fmt(report.f1.threshold) << '\n';
  os << "micro_f1=" << fmt(report.f1.micro) << '\n';
  os << "macro_f1=" << fmt(report.f1.macro) << '\n';
  if (report.distinguishability) {
    const auto& d = *report.distinguishability;
    os << "wasserstein_mean=" << fmt(d.mean) << '\n';
    os << "logit_median_annotated_positive=" << fmt(d.logit_medians.annotated_positive) << '\n';
    os << "logit_median_unannotated_positive=" << fmt(d.logit_medians.unannotated_positive) << '\n';
    os << "logit_median_unannotated_negative=" << fmt(d.logit_medians.unannotated_negative) << '\n';
  }
}

void write_per_class_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "class,ap,wasserstein\n";
  for (std::size_t c = 0; c < report.ap.per_class.size(); ++c) {
    os << c << ',' << fmt(report.ap.per_class[c]) << ',';
    if (report.distinguishability) os << fmt(report.distinguishability->per_class[c]);
    os << '\n';
  }
}

}  // namespace spml
