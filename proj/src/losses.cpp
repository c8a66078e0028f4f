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

#include "spml/losses.hpp"

namespace spml {

std::string_view to_string(LossTag tag) {
  switch (tag) {
    case LossTag::AN: return "an";
    case LossTag::EM: return "em";
    case LossTag::EM_APL: return "em-apl";
    case LossTag::DW: return "dw";
    case LossTag::LS: return "ls";
    case LossTag::NLS: return "nls";
    case LossTag::ENTMIN: return "entmin";
  }
  return "unknown";
}

LossTag parse_loss_tag(std::string_view name) {
  for (LossTag t : {LossTag::AN, LossTag::EM, LossTag::EM_APL, LossTag::DW, LossTag::LS,
                    LossTag::NLS, LossTag::ENTMIN})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

void LossKind::validate() const {
  if (alpha < 0 || beta < 0 || down_weight < 0 || entmin_weight < 0)
    throw ConfigError("loss weights must be non-negative");
  if (!(smoothing >= 0 && smoothing < 0.5)) throw ConfigError("smoothing must lie in [0, 0.5)");
}

void WeightPenalty::validate() const {
  if (coefficient < 0) throw ConfigError("penalty coefficient must be non-negative");
}

const HyperparameterPreset& find_preset(std::string_view dataset) {
  for (const auto& p : kPublishedPresets)
    if (p.dataset == dataset) return p;
  throw ConfigError("unknown preset '" + std::string(dataset) + "'");
}

}  // namespace spml
