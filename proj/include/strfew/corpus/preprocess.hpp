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
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "strfew/core/random.hpp"
#include "strfew/corpus/charset.hpp"
#include "strfew/corpus/sample.hpp"

namespace strfew {

// ---------------------------------------------------------------------------
// Filtering

enum class DontCareMode {
  kPureHashRuns,  // "#", "##", "###", "####"
  kHash3And4,     // "###", "####" only (MLT19 convention)
  kNone,
};

enum class VerticalRule { kLabeled, kUnlabeled };

enum class FilterRule : int { kDontCare = 0, kStar, kCharset, kVertical, kLength };
inline constexpr int kFilterRuleCount = 5;
const char* to_string(FilterRule rule);

struct FilterPolicy {
  DontCareMode dont_care = DontCareMode::kPureHashRuns;
  bool exclude_star_labels = false;
  bool charset_filter = true;
  VerticalRule vertical_rule = VerticalRule::kLabeled;
  int max_label_length = 25;

  void validate() const {
    if (max_label_length < 1) throw std::invalid_argument("max_label_length must be >= 1");
  }
};

/// Default per-dataset policy table. Benchmark-style sets (svt, iiit, ic13,
/// ic15, coco) skip don't-care filtering, mlt19 only drops "###"/"####", uber
/// additionally drops any label containing '*'. Names are matched
/// case-insensitively; unknown datasets get the pure-hash-run default.
FilterPolicy default_filter_policy(const std::string& dataset, bool labeled);

/// The individual rule predicate. Returns the first rule (in order a..e) that
/// rejects the sample, or nullopt if it is kept. `label` is null for
/// unlabeled samples, which are only subject to the vertical rule.
std::optional<FilterRule> first_rejecting_rule(const std::string* label, int width, int height,
                                               const FilterPolicy& policy, const Charset& charset);

/// Evaluate one rule in isolation; used to check order-invariance.
bool rule_rejects(FilterRule rule, const std::string* label, int width, int height,
                  const FilterPolicy& policy, const Charset& charset);

struct Rejection {
  std::string id;
  FilterRule rule;
};

template <typename Sample>
struct FilterResult {
  std::vector<Sample> kept;
  std::array<std::size_t, kFilterRuleCount> rejected{};
  std::vector<Rejection> log;
};

template <typename Sample>
FilterResult<Sample> filter_samples(std::vector<Sample> samples, const FilterPolicy& policy,
                                    const Charset& charset) {
  policy.validate();
  FilterResult<Sample> out;
  for (auto& s : samples) {
    auto rule = first_rejecting_rule(label_of(s), s.image.width, s.image.height, policy, charset);
    if (rule) {
      ++out.rejected[static_cast<int>(*rule)];
      out.log.push_back({s.id, *rule});
    } else {
      out.kept.push_back(std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deduplication

/// SHA-256 (hex) over the raster dimensions and pixel bytes. Throws naming
/// `id` if the raster is empty (undecoded).
std::string pixel_content_key(const Raster& image, const std::string& id);

template <typename Sample>
using Keyer = std::function<std::string(const Sample&)>;

template <typename Sample>
Keyer<Sample> pixel_hash_keyer() {
  return [](const Sample& s) { return pixel_content_key(s.image, s.id); };
}

/// Scene-image/label matching keyer for sources whose crops differ between
/// datasets but whose scene annotations coincide.
inline Keyer<LabeledSample> scene_label_keyer() {
  return [](const LabeledSample& s) { return s.scene + '\x1f' + s.label; };
}

template <typename Sample>
struct DedupResult {
  std::vector<Sample> kept;
  std::vector<std::pair<std::string, std::string>> removed;  // (removed id, matching id)
};

template <typename Sample, typename Other = Sample>
DedupResult<Sample> dedup_samples(std::vector<Sample> primary, const std::vector<Other>& against,
                                  const Keyer<Sample>& key_primary,
                                  const Keyer<Other>& key_against) {
  std::unordered_map<std::string, std::string> seen;
  for (const auto& s : against) seen.emplace(key_against(s), s.id);
  DedupResult<Sample> out;
  for (auto& s : primary) {
    auto it = seen.find(key_primary(s));
    if (it != seen.end()) {
      out.removed.emplace_back(s.id, it->second);
    } else {
      out.kept.push_back(std::move(s));
    }
  }
  return out;
}

template <typename Sample>
DedupResult<Sample> dedup_samples(std::vector<Sample> primary, const std::vector<Sample>& against,
                                  const Keyer<Sample>& keyer = pixel_hash_keyer<Sample>()) {
  return dedup_samples<Sample, Sample>(std::move(primary), against, keyer, keyer);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  std::vector<double> ratios{0.9, 0.1};  // (train, valid) or (train, valid, eval)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Split sizes for n samples: floor(n * ratio) for valid/eval, remainder to train.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec);

template <typename Sample>
struct SplitResult {
  std::vector<Sample> train, valid, eval;
  std::vector<std::string> warnings;
};

template <typename Sample>
SplitResult<Sample> split_dataset(std::vector<Sample> samples, const SplitSpec& spec) {
  spec.validate();
  if (samples.empty()) throw std::invalid_argument("cannot split an empty sample list");
  const auto sizes = split_sizes(samples.size(), spec);
  Rng rng(spec.seed);
  const auto perm = rng.permutation(samples.size());
  SplitResult<Sample> out;
  std::size_t k = 0;
  for (; k < sizes[0]; ++k) out.train.push_back(std::move(samples[perm[k]]));
  for (; k < sizes[0] + sizes[1]; ++k) out.valid.push_back(std::move(samples[perm[k]]));
  for (; k < samples.size(); ++k) out.eval.push_back(std::move(samples[perm[k]]));
  const char* names[] = {"train", "valid", "eval"};
  for (std::size_t i = 0; i < spec.ratios.size(); ++i) {
    if (spec.ratios[i] > 0 && sizes[i] == 0) {
      out.warnings.push_back(std::string(names[i]) + " split is empty for n=" +
                             std::to_string(samples.size()));
    }
  }
  return out;
}

}  // namespace strfew
