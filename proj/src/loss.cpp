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

#include "strfew/loss.hpp"

namespace strfew {

LossValue ctc_oracle_nll(const nn::Mat<double>& frame_probs, const std::vector<int>& label) {
  const int T = static_cast<int>(frame_probs.rows());
  const int C = static_cast<int>(frame_probs.cols());
  if (T > 8 || C > 6) throw OracleTooLarge("oracle limited to T <= 8 and 5 symbols plus blank");
  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double total = 0.0;
  std::vector<int> collapsed;
  while (true) {
    collapsed.clear();
    int prev = -1;
    double p = 1.0;
    for (int t = 0; t < T; ++t) {
      const int k = path[static_cast<std::size_t>(t)];
      p *= frame_probs(t, k);
      if (k != prev && k != CtcClasses::kBlank) collapsed.push_back(k);
      prev = k;
    }
    if (collapsed == label) total += p;
    int t = T - 1;
    while (t >= 0 && ++path[static_cast<std::size_t>(t)] == C) path[static_cast<std::size_t>(t--)] = 0;
    if (t < 0) break;
  }
  LossValue out;
  out.count = 1;
  if (total <= 0.0) {
    out.feasible = false;
    out.value = std::numeric_limits<double>::infinity();
  } else {
    out.value = -std::log(total);
  }
  return out;
}

}  // namespace strfew
