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

#include "spml/common.hpp"

#include <cstring>

namespace spml {

void require_alphabet(const LabelMatrix& labels, bool allow_negative, bool allow_zero,
                      bool allow_positive, const std::string& what) {
  for (Index j = 0; j < labels.cols(); ++j) {
    for (Index i = 0; i < labels.rows(); ++i) {
      const int v = labels(i, j);
      const bool ok = (v == kNegative && allow_negative) || (v == kUnannotated && allow_zero) ||
                      (v == kPositive && allow_positive);
      if (!ok)
        throw ContractError(what + ": value " + std::to_string(v) + " not allowed at row " +
                            std::to_string(i) + ", column " + std::to_string(j));
    }
  }
}

bool contains_value(const LabelMatrix& labels, int value) {
  return (labels.array() == value).any();
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

template <typename M>
std::uint64_t fingerprint_matrix(const M& m) {
  std::uint64_t h = kFnvOffset;
  const std::int64_t shape[2] = {static_cast<std::int64_t>(m.rows()),
                                 static_cast<std::int64_t>(m.cols())};
  h = fnv1a(h, shape, sizeof(shape));
  return fnv1a(h, m.data(), sizeof(typename M::Scalar) * static_cast<std::size_t>(m.size()));
}

}  // namespace

std::uint64_t fingerprint(const MatrixXd& m) { return fingerprint_matrix(m); }
std::uint64_t fingerprint(const LabelMatrix& m) { return fingerprint_matrix(m); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace spml
