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

#include "spml/soft_labels.hpp"

#include <string>

namespace spml {

void SoftLabelStore::set(Index sample, Index cls, double value) {
  if (!(value >= 0.0 && value <= 1.0))
    throw DomainError("soft label outside [0, 1] at (" + std::to_string(sample) + ", " +
                      std::to_string(cls) + ")");
  const auto [it, inserted] = values_.emplace(Key{sample, cls}, value);
  if (!inserted)
    throw StateError("soft label already recorded for (" + std::to_string(sample) + ", " +
                     std::to_string(cls) + ")");
}

std::optional<double> SoftLabelStore::find(Index sample, Index cls) const {
  const auto it = values_.find({sample, cls});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

SoftLabelStore SoftLabelStore::gather(std::span<const Index> rows) const {
  SoftLabelStore out;
  if (values_.empty()) return out;
  for (std::size_t local = 0; local < rows.size(); ++local) {
    const Index global = rows[local];
    for (auto it = values_.lower_bound({global, 0}); it != values_.end() && it->first.first == global;
         ++it)
      out.values_.emplace(Key{static_cast<Index>(local), it->first.second}, it->second);
  }
  return out;
}

}  // namespace spml
