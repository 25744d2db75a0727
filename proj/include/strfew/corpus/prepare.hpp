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
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "strfew/corpus/charset.hpp"
#include "strfew/corpus/manifest.hpp"
#include "strfew/corpus/pack.hpp"
#include "strfew/corpus/preprocess.hpp"

namespace strfew {

struct PrepareOptions {
  /// Per-dataset policy overrides; others use default_filter_policy.
  std::map<std::string, FilterPolicy> policies;
  /// Ratios for labeled entries without a split hint.
  SplitSpec split;
  /// Drop training/validation samples whose pixels match an eval sample.
  bool dedup_against_eval = true;
  /// Image paths are resolved against this directory unless absolute.
  std::filesystem::path image_root;
};

struct PrepareReport {
  std::map<std::string, std::array<std::size_t, kFilterRuleCount>> rejected;
  std::vector<Rejection> rejection_log;
  std::vector<std::pair<std::string, std::string>> duplicates;
  std::vector<std::string> warnings;
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
};

FilterPolicy policy_for(const PrepareOptions& options, const std::string& dataset, bool labeled);

/// Decode, filter, deduplicate, split and pack a manifest. Writes the packed
/// dataset to `out` plus a `rejections.csv` sidecar with rule attribution.
PrepareReport prepare_corpus(const DatasetManifest& manifest, const std::filesystem::path& out,
                             const PrepareOptions& options, const Charset& charset = Charset::standard());

}  // namespace strfew
