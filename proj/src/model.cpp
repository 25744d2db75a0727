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

#include "strfew/model/model.hpp"

namespace strfew {

std::vector<int> encode_classes(const std::string& label, const Charset& cs, Predictor p) {
  std::vector<int> ids = cs.encode(label);
  const int offset = p == Predictor::kCtc ? CtcClasses::kOffset : AttentionClasses::kOffset;
  for (int& i : ids) i += offset;
  return ids;
}

// Instantiated once here to surface template errors at library build time.
template class StrModel<float>;
template class PretextModel<float>;

}  // namespace strfew
