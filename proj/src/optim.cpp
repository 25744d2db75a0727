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

#include "strfew/train/optim.hpp"

#include <numbers>

namespace strfew {

void OptimizerConfig::validate() const {
  if (!(max_lr > 0.0)) throw std::invalid_argument("optim.max_lr must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("optim.clip_norm must be positive");
  if (total_iters < 1) throw std::invalid_argument("optim.total_iters must be positive");
  if (batch_size < 1) throw std::invalid_argument("optim.batch_size must be positive");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) throw std::invalid_argument("optim.warmup_fraction must lie in [0, 1]");
  if (!(initial_div >= 1.0) || !(final_div >= 1.0)) throw std::invalid_argument("optim divisors must be >= 1");
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::int64_t lr_peak_iter(const OptimizerConfig& cfg) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(cfg.total_iters) * cfg.warmup_fraction + 1e-9));
}

double lr_one_cycle(std::int64_t iter, const OptimizerConfig& cfg) {
  if (iter < 0 || iter >= cfg.total_iters) {
    throw std::out_of_range("iteration " + std::to_string(iter) + " outside [0, " + std::to_string(cfg.total_iters) + ")");
  }
  const std::int64_t peak = lr_peak_iter(cfg);
  if (iter == peak) return cfg.max_lr;
  if (iter < peak) {
    const double lo = cfg.max_lr / cfg.initial_div;
    return lo + (cfg.max_lr - lo) * static_cast<double>(iter) / static_cast<double>(peak);
  }
  const std::int64_t last = cfg.total_iters - 1;
  const double lo = cfg.max_lr / cfg.final_div;
  const double frac = static_cast<double>(iter - peak) / static_cast<double>(last - peak);
  return lo + (cfg.max_lr - lo) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace strfew
