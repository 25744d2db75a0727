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

namespace strfew::toy {

constexpr int kGlyphRows = 7;
constexpr int kGlyphCols = 5;

struct Glyph {
  bool defined = false;
  bool ink[kGlyphRows][kGlyphCols] = {};
};

/// Bundled glyph for [0-9A-Za-z], or nullptr.
const Glyph* find_glyph(char c);

}  // namespace strfew::toy
