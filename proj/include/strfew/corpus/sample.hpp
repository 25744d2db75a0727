// Copyright 2026 The strfew Authors
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

#include <optional>
#include <string>

#include "strfew/core/raster.hpp"

namespace strfew {

struct LabeledSample {
  Raster image;
  std::string label;
  std::string dataset;
  std::string id;
  std::string scene;  // optional scene identifier, used by the scene/label keyer
};

struct UnlabeledSample {
  Raster image;
  std::string dataset;
  std::string id;
  std::string scene;
};

struct PseudoLabeledSample {
  UnlabeledSample base;
  std::string pseudo_label;
  double confidence = 0.0;
};

// Uniform accessors so corpus algorithms can be written once for both kinds.
inline const std::string* label_of(const LabeledSample& s) { return &s.label; }
inline const std::string* label_of(const UnlabeledSample&) { return nullptr; }

inline LabeledSample as_labeled(const PseudoLabeledSample& s) {
  return LabeledSample{s.base.image, s.pseudo_label, s.base.dataset, s.base.id, s.base.scene};
}

}  // namespace strfew
