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

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spml {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// N x C integer label matrix. Annotations live in {-1, 0, +1}
/// (negative / unannotated / positive); ground truth lives in {-1, +1}.
using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
using AnnotationMatrix = LabelMatrix;
using GroundTruthMatrix = LabelMatrix;

inline constexpr int kNegative = -1;
inline constexpr int kUnannotated = 0;
inline constexpr int kPositive = 1;

// Error hierarchy. Every failure surfaced by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// Input violates a function's label-alphabet or shape contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class SequencingError : public StateError {
 public:
  using StateError::StateError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Validates that every entry of `labels` is one of the allowed values.
/// Throws ContractError naming the offending cell.
void require_alphabet(const LabelMatrix& labels, bool allow_negative, bool allow_zero,
                      bool allow_positive, const std::string& what);

bool contains_value(const LabelMatrix& labels, int value);

/// FNV-1a over the raw bytes of a matrix plus its shape; used for manifests.
std::uint64_t fingerprint(const MatrixXd& m);
std::uint64_t fingerprint(const LabelMatrix& m);

/// Independent sub-seed for `stream` (splitmix64 of seed and stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace spml
