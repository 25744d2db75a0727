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

#include "strfew/sampler.hpp"

#include <algorithm>

namespace strfew {

int balanced_quota(int batch_size, int num_datasets) {
  if (batch_size < 1 || num_datasets < 1) {
    throw std::invalid_argument("batch size and dataset count must be positive");
  }
  const int q = static_cast<int>(std::lround(static_cast<double>(batch_size) / num_datasets));
  return std::max(q, 1);
}

BalancedSampler::BalancedSampler(std::vector<std::size_t> dataset_sizes, int batch_size,
                                 std::uint64_t seed) {
  if (dataset_sizes.empty()) throw std::invalid_argument("sampler needs at least one dataset");
  quota_ = balanced_quota(batch_size, static_cast<int>(dataset_sizes.size()));
  for (std::size_t d = 0; d < dataset_sizes.size(); ++d) {
    if (dataset_sizes[d] == 0) {
      throw std::invalid_argument("dataset " + std::to_string(d) + " is empty");
    }
    DatasetState st;
    st.size = dataset_sizes[d];
    st.rng = Rng(Rng::derive(seed, d));
    st.order = st.rng.permutation(st.size);
    states_.push_back(std::move(st));
  }
}

std::vector<SampleRef> BalancedSampler::next_batch() {
  std::vector<SampleRef> batch;
  batch.reserve(static_cast<std::size_t>(batch_length()));
  for (std::size_t d = 0; d < states_.size(); ++d) {
    auto& st = states_[d];
    for (int k = 0; k < quota_; ++k) {
      if (st.cursor == st.size) {
        st.rng.shuffle(st.order);
        st.cursor = 0;
        ++st.epoch;
      }
      batch.push_back({static_cast<int>(d), st.order[st.cursor++]});
    }
  }
  return batch;
}

std::vector<std::size_t> subsample_indices(std::size_t n, double ratio, std::uint64_t seed,
                                           std::string* warning) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("ratio must be in (0, 1]");
  if (n == 0) return {};
  auto keep = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
  if (keep == 0) {
    keep = 1;
    if (warning) *warning = "ratio reduces " + std::to_string(n) + " samples to zero; keeping one";
  }
  if (ratio == 1.0) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  Rng rng(seed);
  auto perm = rng.permutation(n);
  perm.resize(keep);
  std::sort(perm.begin(), perm.end());
  return perm;
}

}  // namespace strfew
