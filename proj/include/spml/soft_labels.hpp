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

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>

#include "spml/common.hpp"

namespace spml {

/// Sparse (sample, class) -> soft label s in [0, 1]. Entries are frozen once
/// written; overwriting an existing key is a StateError.
class SoftLabelStore {
 public:
  using Key = std::pair<Index, Index>;

  void set(Index sample, Index cls, double value);
  std::optional<double> find(Index sample, Index cls) const;
  bool contains(Index sample, Index cls) const { return values_.count({sample, cls}) != 0; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  /// Re-keys the entries of the given global rows to batch-local row indices.
  SoftLabelStore gather(std::span<const Index> rows) const;

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::map<Key, double> values_;
};

}  // namespace spml
