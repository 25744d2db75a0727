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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "strfew/core/random.hpp"

namespace strfew {

struct SampleRef {
  int dataset = 0;
  std::size_t index = 0;

  friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

/// Per-dataset quota for a balanced batch, round(batch_size / num_datasets),
/// never below one.
int balanced_quota(int batch_size, int num_datasets);

/// Draws balanced mini-batches: every batch holds exactly `quota` samples from
/// each dataset. Each dataset walks its own shuffled order and is reshuffled
/// whenever it wraps, so no sample repeats within a per-dataset epoch.
class BalancedSampler {
 public:
  BalancedSampler(std::vector<std::size_t> dataset_sizes, int batch_size, std::uint64_t seed);

  std::vector<SampleRef> next_batch();

  int quota() const { return quota_; }
  int num_datasets() const { return static_cast<int>(states_.size()); }
  int batch_length() const { return quota_ * num_datasets(); }
  std::uint64_t epoch(int dataset) const { return states_.at(static_cast<std::size_t>(dataset)).epoch; }

 private:
  struct DatasetState {
    std::size_t size = 0;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    Rng rng;
  };
  std::vector<DatasetState> states_;
  int quota_ = 1;
};

/// Indices kept when reducing a dataset of size n to `ratio`: the first
/// floor(n * ratio) entries (at least one for n > 0) of a seeded permutation
/// that does not depend on the ratio, so smaller ratios select subsets of
/// larger ones.
std::vector<std::size_t> subsample_indices(std::size_t n, double ratio, std::uint64_t seed,
                                           std::string* warning = nullptr);

template <typename Sample>
std::vector<std::vector<Sample>> subsample_ratio(const std::vector<std::vector<Sample>>& split,
                                                 double ratio, std::uint64_t seed,
                                                 std::vector<std::string>* warnings = nullptr) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("ratio must be in (0, 1]");
  std::vector<std::vector<Sample>> out(split.size());
  for (std::size_t d = 0; d < split.size(); ++d) {
    std::string warning;
    const auto keep = subsample_indices(split[d].size(), ratio, Rng::derive(seed, d), &warning);
    if (!warning.empty() && warnings) warnings->push_back("dataset " + std::to_string(d) + ": " + warning);
    out[d].reserve(keep.size());
    for (auto i : keep) out[d].push_back(split[d][i]);
  }
  return out;
}

}  // namespace strfew
