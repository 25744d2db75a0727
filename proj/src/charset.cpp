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

#include "strfew/corpus/charset.hpp"

#include <stdexcept>

namespace strfew {

Charset::Charset(std::string_view chars, std::vector<std::string> special_tokens)
    : chars_(chars), specials_(std::move(special_tokens)) {
  lookup_.fill(-1);
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    auto& slot = lookup_[static_cast<unsigned char>(chars_[i])];
    if (slot >= 0) throw std::invalid_argument("duplicate character in charset");
    slot = static_cast<int>(i);
  }
  for (const auto& tok : specials_) {
    if (tok.size() == 1 && lookup_[static_cast<unsigned char>(tok[0])] >= 0) {
      throw std::invalid_argument("special token collides with a recognizable character: " + tok);
    }
  }
}

const Charset& Charset::standard() {
  static const Charset cs = [] {
    std::string chars;
    for (int c = 33; c <= 126; ++c) chars.push_back(static_cast<char>(c));
    return Charset(chars, {"[PAD]", "[UNK]", " "});
  }();
  return cs;
}

bool Charset::covers(std::string_view label) const {
  for (char c : label) {
    if (lookup_[static_cast<unsigned char>(c)] < 0) return false;
  }
  return true;
}

std::vector<int> Charset::encode(std::string_view label) const {
  std::vector<int> out;
  out.reserve(label.size());
  for (char c : label) {
    const int v = lookup_[static_cast<unsigned char>(c)];
    if (v < 0) {
      throw std::invalid_argument("character outside charset: '" + std::string(1, c) + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string Charset::decode(std::span<const int> indices) const {
  std::string out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(char_at(i));
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace strfew
