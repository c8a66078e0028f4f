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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "spml/common.hpp"
#include "spml/soft_labels.hpp"

namespace spml {

enum class LossTag { AN, EM, EM_APL, DW, LS, NLS, ENTMIN };

std::string_view to_string(LossTag tag);
LossTag parse_loss_tag(std::string_view name);

/// Loss selector plus every hyperparameter any loss might read.
/// alpha weights entropy maximization, beta weights the soft negative
/// pseudo-label term, down_weight scales the assumed-negative term (DW),
/// smoothing is the label-smoothing epsilon (LS / N-LS) and entmin_weight
/// scales entropy minimization.
struct LossKind {
  LossTag tag = LossTag::EM;
  double alpha = 0.2;
  double beta = 0.02;
  double down_weight = 0.1;
  double smoothing = 0.1;
  double entmin_weight = 0.01;

  void validate() const;
  /// True when the loss accepts -1 (negative) annotations.
  bool accepts_negatives() const { return tag == LossTag::EM_APL; }
};

enum class PenaltyKind { None, L1, L2 };

struct WeightPenalty {
  PenaltyKind kind = PenaltyKind::None;
  double coefficient = 0.0;

  void validate() const;
};

/// Per-regime sums of per-label loss, used for training traces.
struct LossTermSums {
  double positive = 0.0;
  double unannotated = 0.0;
  double pseudo = 0.0;
  Index positive_count = 0;
  Index unannotated_count = 0;
  Index pseudo_count = 0;
};

template <typename Scalar>
struct LossOutput {
  Scalar scalar_loss = 0;
  Matrix<Scalar> per_label_loss;
  Matrix<Scalar> logit_gradient;
  LossTermSums terms;
};

/// One published hyperparameter row (batch size, learning rate, alpha, beta,
/// theta percent, warm-up epochs) per benchmark dataset.
struct HyperparameterPreset {
  std::string_view dataset;
  int batch_size;
  double learning_rate;
  double alpha;
  double beta;
  double theta;
  int warmup_epochs;
};

inline constexpr std::array<HyperparameterPreset, 4> kPublishedPresets{{
    {"voc", 8, 1e-5, 0.2, 0.02, 90.0, 5},
    {"coco", 16, 1e-5, 0.1, 0.9, 90.0, 5},
    {"nus", 16, 1e-5, 0.1, 0.2, 90.0, 4},
    {"cub", 8, 1e-4, 0.01, 0.4, 90.0, 3},
}};

const HyperparameterPreset& find_preset(std::string_view dataset);

inline constexpr double kProbabilityClamp = 1e-7;

template <typename Scalar>
Scalar stable_sigmoid(Scalar g) {
  if (!std::isfinite(g)) throw NumericError("stable_sigmoid: non-finite logit");
  if (g >= Scalar(0)) {
    const Scalar z = std::exp(-g);
    return Scalar(1) / (Scalar(1) + z);
  }
  const Scalar z = std::exp(g);
  return z / (Scalar(1) + z);
}

template <typename Scalar>
Matrix<Scalar> sigmoid(const Matrix<Scalar>& logits) {
  return logits.unaryExpr([](Scalar g) { return stable_sigmoid(g); });
}

/// Inverse of the sigmoid; used to build logits from probability fixtures.
template <typename Scalar>
Scalar logit(Scalar p) {
  return std::log(p) - std::log1p(-p);
}

/// Natural-log binary entropy with H(0) = H(1) = 0.
template <typename Scalar>
Scalar binary_entropy(Scalar p) {
  if (!(p >= Scalar(0) && p <= Scalar(1))) throw DomainError("binary_entropy: p outside [0, 1]");
  Scalar h = 0;
  if (p > Scalar(0)) h -= p * std::log(p);
  if (p < Scalar(1)) h -= (Scalar(1) - p) * std::log1p(-p);
  return h;
}

/// s log f + (1 - s) log(1 - f). Negative-valued; callers apply the minus.
template <typename Scalar>
Scalar soft_negative_loss(Scalar f, Scalar s) {
  if (!(f >= Scalar(0) && f <= Scalar(1)))
    throw DomainError("soft_negative_loss: probability outside [0, 1]");
  if (!(s >= Scalar(0) && s <= Scalar(1)))
    throw DomainError("soft_negative_loss: soft label outside [0, 1]");
  Scalar v = 0;
  if (s > Scalar(0)) v += s * std::log(f);
  if (s < Scalar(1)) v += (Scalar(1) - s) * std::log1p(-f);
  return v;
}

namespace detail {

template <typename Scalar>
Scalar clamp_probability(Scalar p) {
  const Scalar eps = Scalar(kProbabilityClamp);
  return std::clamp(p, eps, Scalar(1) - eps);
}

template <typename Scalar>
struct LabelTerm {
  Scalar loss;
  Scalar grad;
};

// sigmoid(g) and sigmoid(-g), each computed directly so that neither is
// formed as 1 minus the other.
template <typename Scalar>
struct SigmoidPair {
  Scalar p;
  Scalar q;
};

// Binary cross-entropy against a (possibly smoothed) target t in [0, 1].
// The gradient p - t is evaluated as (1 - t) p - t q.
template <typename Scalar>
LabelTerm<Scalar> target_cross_entropy(SigmoidPair<Scalar> s, Scalar t, Scalar weight = Scalar(1)) {
  const Scalar f = clamp_probability(s.p);
  const Scalar loss = -(t * std::log(f) + (Scalar(1) - t) * std::log1p(-f));
  return {weight * loss, weight * ((Scalar(1) - t) * s.p - t * s.q)};
}

// weight * g * sigmoid(g) * sigmoid(-g), the logit derivative of -weight * H.
template <typename Scalar>
Scalar entropy_logit_gradient(Scalar g, SigmoidPair<Scalar> s, Scalar weight) {
  return weight * g * s.p * s.q;
}

template <typename Scalar>
LabelTerm<Scalar> label_term(const LossKind& kind, Scalar g, int y, std::optional<double> soft) {
  const SigmoidPair<Scalar> p{stable_sigmoid(g), stable_sigmoid(-g)};
  const Scalar one(1), zero(0);
  switch (kind.tag) {
    case LossTag::AN:
      return target_cross_entropy(p, y == kPositive ? one : zero);
    case LossTag::DW:
      return y == kPositive ? target_cross_entropy(p, one)
                            : target_cross_entropy(p, zero, Scalar(kind.down_weight));
    case LossTag::LS: {
      const Scalar eps(kind.smoothing);
      return target_cross_entropy(p, y == kPositive ? one - eps : eps);
    }
    case LossTag::NLS:
      return target_cross_entropy(p, y == kPositive ? one : Scalar(kind.smoothing));
    case LossTag::ENTMIN:
      if (y == kPositive) return target_cross_entropy(p, one);
      {
        const Scalar w(kind.entmin_weight);
        return {w * binary_entropy(clamp_probability(p.p)), -entropy_logit_gradient(g, p, w)};
      }
    case LossTag::EM:
    case LossTag::EM_APL:
      if (y == kPositive) return target_cross_entropy(p, one);
      if (y == kUnannotated) {
        const Scalar a(kind.alpha);
        return {-a * binary_entropy(clamp_probability(p.p)), entropy_logit_gradient(g, p, a)};
      }
      // y == -1: beta-weighted cross-entropy against the frozen soft label.
      return target_cross_entropy(p, Scalar(*soft), Scalar(kind.beta));
  }
  throw ConfigError("unknown loss kind");
}

}  // namespace detail

/// Forward value and logit gradient of any in-scope loss. The scalar is the
/// per-sample mean over classes averaged over the batch; the gradient carries
/// the same 1 / (N * C) normalization. `soft` is required (and indexed with
/// batch-local rows) only when annotations contain -1.
template <typename Scalar>
LossOutput<Scalar> compute_loss(const LossKind& kind, const Matrix<Scalar>& logits,
                                const AnnotationMatrix& ann, const SoftLabelStore* soft = nullptr) {
  kind.validate();
  if (logits.rows() != ann.rows() || logits.cols() != ann.cols())
    throw ContractError("loss: logits and annotations differ in shape");
  require_alphabet(ann, kind.accepts_negatives(), true, true,
                   std::string(to_string(kind.tag)) + " annotations");

  const Index n = logits.rows(), c = logits.cols();
  LossOutput<Scalar> out;
  out.per_label_loss.resize(n, c);
  out.logit_gradient.resize(n, c);
  const Scalar norm = Scalar(1) / Scalar(std::max<Index>(1, n * c));
  Scalar total = 0;
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < n; ++i) {
      const int y = ann(i, j);
      std::optional<double> s;
      if (y == kNegative) {
        if (soft) s = soft->find(i, j);
        if (!s)
          throw StateError("loss: negative annotation at (" + std::to_string(i) + ", " +
                           std::to_string(j) + ") has no soft label");
      }
      const auto term = detail::label_term<Scalar>(kind, logits(i, j), y, s);
      out.per_label_loss(i, j) = term.loss;
      out.logit_gradient(i, j) = term.grad * norm;
      total += term.loss;
      const double v = static_cast<double>(term.loss);
      if (y == kPositive) {
        out.terms.positive += v;
        ++out.terms.positive_count;
      } else if (y == kUnannotated) {
        out.terms.unannotated += v;
        ++out.terms.unannotated_count;
      } else {
        out.terms.pseudo += v;
        ++out.terms.pseudo_count;
      }
    }
  }
  out.scalar_loss = total * norm;
  return out;
}

template <typename Scalar>
LossOutput<Scalar> an_loss(const Matrix<Scalar>& logits, const AnnotationMatrix& ann) {
  return compute_loss(LossKind{.tag = LossTag::AN}, logits, ann);
}

template <typename Scalar>
LossOutput<Scalar> em_loss(const Matrix<Scalar>& logits, const AnnotationMatrix& ann,
                           double alpha) {
  return compute_loss(LossKind{.tag = LossTag::EM, .alpha = alpha}, logits, ann);
}

template <typename Scalar>
LossOutput<Scalar> em_apl_loss(const Matrix<Scalar>& logits, const AnnotationMatrix& ann,
                               const SoftLabelStore& soft, double alpha, double beta) {
  return compute_loss(LossKind{.tag = LossTag::EM_APL, .alpha = alpha, .beta = beta}, logits,
                      ann, &soft);
}

template <typename Scalar>
LossOutput<Scalar> baseline_loss(const LossKind& kind, const Matrix<Scalar>& logits,
                                 const AnnotationMatrix& ann) {
  switch (kind.tag) {
    case LossTag::AN:
    case LossTag::DW:
    case LossTag::LS:
    case LossTag::NLS:
    case LossTag::ENTMIN:
      return compute_loss(kind, logits, ann);
    default:
      throw ConfigError("baseline_loss: " + std::string(to_string(kind.tag)) +
                        " is not a baseline loss");
  }
}

/// Central-difference check of the analytic logit gradient. Returns the
/// maximum over entries of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
template <typename Scalar>
Scalar finite_difference_check(const LossKind& kind, const Matrix<Scalar>& logits,
                               const AnnotationMatrix& ann, const SoftLabelStore* soft = nullptr,
                               Scalar h = Scalar(1e-5)) {
  const auto analytic = compute_loss(kind, logits, ann, soft).logit_gradient;
  Matrix<Scalar> probe = logits;
  Scalar worst = 0;
  for (Index j = 0; j < logits.cols(); ++j) {
    for (Index i = 0; i < logits.rows(); ++i) {
      const Scalar g = logits(i, j);
      probe(i, j) = g + h;
      const Scalar up = compute_loss(kind, probe, ann, soft).scalar_loss;
      probe(i, j) = g - h;
      const Scalar down = compute_loss(kind, probe, ann, soft).scalar_loss;
      probe(i, j) = g;
      const Scalar numeric = (up - down) / (Scalar(2) * h);
      const Scalar a = analytic(i, j);
      const Scalar denom = std::max({std::abs(a), std::abs(numeric), Scalar(1e-8)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace spml
