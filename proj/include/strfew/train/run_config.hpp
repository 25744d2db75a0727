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

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "strfew/corpus/preprocess.hpp"
#include "strfew/model/config.hpp"
#include "strfew/train/optim.hpp"
#include "strfew/train/recipe.hpp"

namespace strfew {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  /// Packed corpora; relative paths resolve against `root`.
  std::filesystem::path root;
  std::vector<std::filesystem::path> labeled;
  std::vector<std::filesystem::path> unlabeled;
  /// Fraction of each labeled training set to keep.
  double label_ratio = 1.0;
  /// Labeled training samples dropped by `label_ratio` join the unlabeled pool.
  bool remainder_unlabeled = false;
  std::string valid_split = "valid";

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// One run: everything needed to call run_recipe.
struct RunConfig {
  DataConfig data;
  ModelConfig model = ModelConfig::mini_crnn();
  TrainRecipe recipe;
  TrainOptions options;

  void validate() const;
};

/// Flat "section.key" -> value view of an INI file.
using ConfigValues = std::map<std::string, std::string>;

ConfigValues read_config_values(const std::filesystem::path& path);

/// Applies values over defaults. `overrides` ("section.key=value") win over
/// the file. Unknown keys are errors.
RunConfig build_run_config(const ConfigValues& values);
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
void apply_override(ConfigValues& values, const std::string& assignment);

/// Loads packed corpora and applies the label ratio. `seed` drives the
/// subsample.
TrainData load_train_data(const DataConfig& data, std::uint64_t seed);

/// Per-dataset filter policy file: one section per dataset with keys
/// dont_care, exclude_star, charset_filter, vertical, max_label_length.
std::map<std::string, FilterPolicy> load_filter_policies(const std::filesystem::path& path);

}  // namespace strfew
