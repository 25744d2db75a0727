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

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace strfew {

/// Ordered recognizable character set plus special tokens.
///
/// The standard set is the 94 printable non-space ASCII characters: 26
/// uppercase, 26 lowercase, 10 digits and 32 punctuation marks, indexed in
/// code-point order. Special tokens are kept apart from the recognizable set;
/// decoder heads reserve their own leading class indices on top of it (see
/// `CtcClasses` and `AttentionClasses`).
class Charset {
 public:
  static constexpr int kStandardSize = 94;

  Charset(std::string_view chars, std::vector<std::string> special_tokens);

  static const Charset& standard();

  int size() const { return static_cast<int>(chars_.size()); }
  const std::string& chars() const { return chars_; }
  const std::vector<std::string>& special_tokens() const { return specials_; }

  std::optional<int> index_of(char c) const {
    const int v = lookup_[static_cast<unsigned char>(c)];
    if (v < 0) return std::nullopt;
    return v;
  }
  char char_at(int index) const { return chars_.at(static_cast<std::size_t>(index)); }

  /// True iff every byte of the label is a recognizable character. Multi-byte
  /// UTF-8 sequences never qualify.
  bool covers(std::string_view label) const;

  /// Recognizable-character indices; throws std::invalid_argument naming the
  /// first unrecognizable character.
  std::vector<int> encode(std::string_view label) const;
  std::string decode(std::span<const int> indices) const;

 private:
  std::string chars_;
  std::vector<std::string> specials_;
  std::array<int, 256> lookup_{};
};

/// CTC output layout: blank at 0, recognizable character i at i + 1.
struct CtcClasses {
  static constexpr int kBlank = 0;
  static constexpr int kOffset = 1;
  static int count(const Charset& cs) { return cs.size() + kOffset; }
};

/// Attention output layout: [SOS] at 0 (only ever fed as input), [EOS] at 1,
/// recognizable character i at i + 2.
struct AttentionClasses {
  static constexpr int kSos = 0;
  static constexpr int kEos = 1;
  static constexpr int kOffset = 2;
  static constexpr int kMaxLength = 25;
  static int count(const Charset& cs) { return cs.size() + kOffset; }
};

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

}  // namespace strfew
