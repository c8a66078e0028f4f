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

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "spml/common.hpp"
#include "spml/losses.hpp"

namespace spml {

/// Trainable tensors of a one-hidden-layer perceptron. With a zero hidden
/// size the network is linear: w1 and b1 are empty and w2 is D x C.
template <typename Scalar>
struct MlpParameters {
  Matrix<Scalar> w1;  // D x H
  Vector<Scalar> b1;  // H
  Matrix<Scalar> w2;  // H x C, or D x C when linear
  Vector<Scalar> b2;  // C

  MlpParameters zeros_like() const {
    return {Matrix<Scalar>::Zero(w1.rows(), w1.cols()), Vector<Scalar>::Zero(b1.size()),
            Matrix<Scalar>::Zero(w2.rows(), w2.cols()), Vector<Scalar>::Zero(b2.size())};
  }

  Index size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  /// Calls f(name, tensor) in checkpoint order.
  template <typename F>
  void for_each(F&& f) const {
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
  }
};

template <typename Scalar>
class Mlp {
 public:
  Mlp() = default;

  static Mlp init(Index input_dim, Index hidden_size, Index output_dim, std::uint64_t seed) {
    if (input_dim < 1 || output_dim < 1 || hidden_size < 0)
      throw ConfigError("Mlp::init: invalid dimensions");
    std::mt19937_64 rng(seed);
    auto glorot = [&rng](Index fan_in, Index fan_out) {
      const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      Matrix<Scalar> w(fan_in, fan_out);
      // Column-major fill order is part of the seeded contract.
      for (Index j = 0; j < fan_out; ++j)
        for (Index i = 0; i < fan_in; ++i) w(i, j) = Scalar(dist(rng));
      return w;
    };
    Mlp m;
    m.hidden_size_ = hidden_size;
    m.input_dim_ = input_dim;
    if (hidden_size == 0) {
      m.params_.w1.resize(0, 0);
      m.params_.b1.resize(0);
      m.params_.w2 = glorot(input_dim, output_dim);
    } else {
      m.params_.w1 = glorot(input_dim, hidden_size);
      m.params_.b1 = Vector<Scalar>::Zero(hidden_size);
      m.params_.w2 = glorot(hidden_size, output_dim);
    }
    m.params_.b2 = Vector<Scalar>::Zero(output_dim);
    return m;
  }

  /// Builds a model around explicit parameters; shapes are validated.
  static Mlp from_parameters(MlpParameters<Scalar> params) {
    Mlp m;
    m.hidden_size_ = params.w1.cols();
    m.input_dim_ = m.hidden_size_ == 0 ? params.w2.rows() : params.w1.rows();
    const bool ok = params.b2.size() == params.w2.cols() &&
                    (m.hidden_size_ == 0 ? params.b1.size() == 0
                                         : params.b1.size() == m.hidden_size_ &&
                                               params.w2.rows() == m.hidden_size_);
    if (!ok || m.input_dim_ < 1 || params.w2.cols() < 1)
      throw ContractError("Mlp::from_parameters: inconsistent shapes");
    m.params_ = std::move(params);
    return m;
  }

  Index input_dim() const { return input_dim_; }
  Index hidden_size() const { return hidden_size_; }
  Index output_dim() const { return params_.b2.size(); }
  Index parameter_count() const { return params_.size(); }

  const MlpParameters<Scalar>& parameters() const { return params_; }
  MlpParameters<Scalar>& parameters() { return params_; }

  /// Pre-sigmoid logits, N x C.
  Matrix<Scalar> forward(const Matrix<Scalar>& x) const {
    check_input(x);
    if (hidden_size_ == 0) return (x * params_.w2).rowwise() + params_.b2.transpose();
    return (hidden_activations(x) * params_.w2).rowwise() + params_.b2.transpose();
  }

  /// Parameter gradients given dL/dlogits. The rectifier's subgradient at 0 is 0.
  MlpParameters<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dlogits) const {
    check_input(x);
    if (dlogits.rows() != x.rows() || dlogits.cols() != output_dim())
      throw ContractError("Mlp::backward: gradient shape mismatch");
    MlpParameters<Scalar> grads = params_.zeros_like();
    grads.b2 = dlogits.colwise().sum().transpose();
    if (hidden_size_ == 0) {
      grads.w2.noalias() = x.transpose() * dlogits;
      return grads;
    }
    const Matrix<Scalar> pre = (x * params_.w1).rowwise() + params_.b1.transpose();
    const Matrix<Scalar> act = pre.cwiseMax(Scalar(0));
    grads.w2.noalias() = act.transpose() * dlogits;
    Matrix<Scalar> dact = dlogits * params_.w2.transpose();
    dact = (pre.array() > Scalar(0)).select(dact, Scalar(0));
    grads.w1.noalias() = x.transpose() * dact;
    grads.b1 = dact.colwise().sum().transpose();
    return grads;
  }

 private:
  void check_input(const Matrix<Scalar>& x) const {
    if (x.cols() != input_dim_)
      throw ContractError("Mlp: expected " + std::to_string(input_dim_) + " features, got " +
                          std::to_string(x.cols()));
  }

  Matrix<Scalar> hidden_activations(const Matrix<Scalar>& x) const {
    return ((x * params_.w1).rowwise() + params_.b1.transpose()).cwiseMax(Scalar(0));
  }

  MlpParameters<Scalar> params_;
  Index hidden_size_ = 0;
  Index input_dim_ = 0;
};

template <typename Scalar>
struct AdamState {
  MlpParameters<Scalar> first_moment;
  MlpParameters<Scalar> second_moment;
  std::int64_t timestep = 0;
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState for_model(const Mlp<Scalar>& model, Scalar learning_rate) {
    AdamState s;
    s.first_moment = model.parameters().zeros_like();
    s.second_moment = model.parameters().zeros_like();
    s.learning_rate = learning_rate;
    return s;
  }
};

/// One bias-corrected Adam update.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, Mlp<Scalar>& model, const MlpParameters<Scalar>& grads) {
  if (grads.size() != model.parameters().size() ||
      state.first_moment.size() != model.parameters().size())
    throw ContractError("adam_step: shape mismatch");
  ++state.timestep;
  const Scalar t = Scalar(state.timestep);
  const Scalar correction1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar correction2 = Scalar(1) - std::pow(state.beta2, t);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.cwiseAbs2();
    param.array() -= state.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + state.epsilon);
  };
  auto& p = model.parameters();
  update(p.w1, state.first_moment.w1, state.second_moment.w1, grads.w1);
  update(p.b1, state.first_moment.b1, state.second_moment.b1, grads.b1);
  update(p.w2, state.first_moment.w2, state.second_moment.w2, grads.w2);
  update(p.b2, state.first_moment.b2, state.second_moment.b2, grads.b2);
}

/// l1 / l2 penalty on weight matrices (biases are not penalized).
template <typename Scalar>
Scalar penalty_value(const WeightPenalty& penalty, const Mlp<Scalar>& model) {
  const auto& p = model.parameters();
  const Scalar lambda(penalty.coefficient);
  switch (penalty.kind) {
    case PenaltyKind::None:
      return Scalar(0);
    case PenaltyKind::L1:
      return lambda * (p.w1.cwiseAbs().sum() + p.w2.cwiseAbs().sum());
    case PenaltyKind::L2:
      return lambda * (p.w1.squaredNorm() + p.w2.squaredNorm());
  }
  return Scalar(0);
}

template <typename Scalar>
void add_penalty_gradient(const WeightPenalty& penalty, const Mlp<Scalar>& model,
                          MlpParameters<Scalar>& grads) {
  const auto& p = model.parameters();
  const Scalar lambda(penalty.coefficient);
  auto sign = [](Scalar v) { return Scalar((v > Scalar(0)) - (v < Scalar(0))); };
  switch (penalty.kind) {
    case PenaltyKind::None:
      return;
    case PenaltyKind::L1:
      grads.w1 += lambda * p.w1.unaryExpr(sign);
      grads.w2 += lambda * p.w2.unaryExpr(sign);
      return;
    case PenaltyKind::L2:
      grads.w1 += Scalar(2) * lambda * p.w1;
      grads.w2 += Scalar(2) * lambda * p.w2;
      return;
  }
}

/// Binary checkpoint container; see README for the byte layout.
void save_checkpoint(const Mlp<double>& model, const std::string& path);
Mlp<double> load_checkpoint(const std::string& path);

}  // namespace spml
