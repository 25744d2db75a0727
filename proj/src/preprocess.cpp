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

#include "strfew/corpus/preprocess.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <memory>

namespace strfew {

const char* to_string(FilterRule rule) {
  switch (rule) {
    case FilterRule::kDontCare: return "dont_care";
    case FilterRule::kStar: return "star";
    case FilterRule::kCharset: return "charset";
    case FilterRule::kVertical: return "vertical";
    case FilterRule::kLength: return "length";
  }
  return "?";
}

FilterPolicy default_filter_policy(const std::string& dataset, bool labeled) {
  std::string name = dataset;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  FilterPolicy p;
  p.vertical_rule = labeled ? VerticalRule::kLabeled : VerticalRule::kUnlabeled;
  if (name == "svt" || name == "iiit" || name == "ic13" || name == "ic15" || name == "coco") {
    p.dont_care = DontCareMode::kNone;
  } else if (name == "mlt19") {
    p.dont_care = DontCareMode::kHash3And4;
  } else if (name == "uber") {
    p.exclude_star_labels = true;
  }
  return p;
}

bool rule_rejects(FilterRule rule, const std::string* label, int width, int height,
                  const FilterPolicy& policy, const Charset& charset) {
  switch (rule) {
    case FilterRule::kDontCare:
      if (!label) return false;
      switch (policy.dont_care) {
        case DontCareMode::kPureHashRuns:
          return *label == "#" || *label == "##" || *label == "###" || *label == "####";
        case DontCareMode::kHash3And4:
          return *label == "###" || *label == "####";
        case DontCareMode::kNone:
          return false;
      }
      return false;
    case FilterRule::kStar:
      return label && policy.exclude_star_labels && label->find('*') != std::string::npos;
    case FilterRule::kCharset:
      return label && policy.charset_filter && !charset.covers(*label);
    case FilterRule::kVertical:
      if (!label || policy.vertical_rule == VerticalRule::kUnlabeled) return height > width;
      return utf8_length(*label) > 2 && height > width;
    case FilterRule::kLength:
      return label && utf8_length(*label) > static_cast<std::size_t>(policy.max_label_length);
  }
  return false;
}

std::optional<FilterRule> first_rejecting_rule(const std::string* label, int width, int height,
                                               const FilterPolicy& policy, const Charset& charset) {
  for (int r = 0; r < kFilterRuleCount; ++r) {
    const auto rule = static_cast<FilterRule>(r);
    if (rule_rejects(rule, label, width, height, policy, charset)) return rule;
  }
  return std::nullopt;
}

std::string pixel_content_key(const Raster& image, const std::string& id) {
  if (image.empty()) throw std::runtime_error("undecodable image for sample " + id);
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(image.width),
                                 static_cast<std::uint32_t>(image.height),
                                 static_cast<std::uint32_t>(image.channels)};
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), dims, sizeof dims) != 1 ||
      EVP_DigestUpdate(ctx.get(), image.pixels.data(), image.pixels.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed for sample " + id);
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

void SplitSpec::validate() const {
  if (ratios.size() != 2 && ratios.size() != 3) {
    throw std::invalid_argument("split ratios must have 2 or 3 entries");
  }
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("split ratios must be nonnegative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  std::array<std::size_t, 3> sizes{0, 0, 0};
  for (std::size_t i = 1; i < spec.ratios.size(); ++i) {
    sizes[i] = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.ratios[i] + 1e-9));
  }
  sizes[0] = n - sizes[1] - sizes[2];
  return sizes;
}

}  // namespace strfew
