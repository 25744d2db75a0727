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

#include "strfew/model/tensor.hpp"

namespace strfew {

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double max_lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.9;  // SGD only
  double weight_decay = 0.0;
  double clip_norm = 5.0;
  std::int64_t total_iters = 200000;
  int batch_size = 128;
  double warmup_fraction = 0.1;
  double initial_div = 25.0;
  double final_div = 1e4;

  void validate() const;
};

OptimizerKind parse_optimizer(const std::string& name);

/// Iteration at which the schedule peaks.
std::int64_t lr_peak_iter(const OptimizerConfig& cfg);

/// Linear ramp from max_lr / initial_div to max_lr over the warm-up
/// fraction, then cosine decay to max_lr / final_div at the last iteration.
double lr_one_cycle(std::int64_t iter, const OptimizerConfig& cfg);

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
double global_grad_norm(const std::vector<nn::NamedParam<Scalar>>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.param->trainable) sq += p.param->grad.template cast<double>().squaredNorm();
  }
  return std::sqrt(sq);
}

/// Scales all trainable gradients by clip_norm / norm when the global L2
/// norm exceeds clip_norm. Returns the norm before clipping. `context`
/// is included in the error raised for non-finite gradients.
template <typename Scalar>
double clip_gradients(const std::vector<nn::NamedParam<Scalar>>& params, double clip_norm,
                      const std::string& context = "") {
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) {
    std::string bad;
    for (const auto& p : params) {
      if (p.param->trainable && !p.param->grad.allFinite()) {
        bad = p.name;
        break;
      }
    }
    throw NonFiniteGradient("non-finite gradient in " + bad + (context.empty() ? "" : " (" + context + ")"));
  }
  if (norm > clip_norm) {
    const Scalar s = static_cast<Scalar>(clip_norm / norm);
    for (const auto& p : params) {
      if (p.param->trainable) p.param->grad *= s;
    }
  }
  return norm;
}

/// Adam or SGD with momentum over a fixed parameter list.
template <typename Scalar>
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const std::vector<nn::NamedParam<Scalar>>& params)
      : cfg_(cfg), params_(params) {
    for (const auto& p : params_) {
      m_.push_back(nn::Mat<Scalar>::Zero(p.param->value.rows(), p.param->value.cols()));
      if (cfg.kind == OptimizerKind::kAdam) v_.push_back(nn::Mat<Scalar>::Zero(p.param->value.rows(), p.param->value.cols()));
    }
  }

  std::int64_t steps() const { return t_; }

  void step(double lr) {
    ++t_;
    const Scalar lr_s = static_cast<Scalar>(lr);
    if (cfg_.kind == OptimizerKind::kAdam) {
      const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      const Scalar b1 = static_cast<Scalar>(cfg_.beta1), b2 = static_cast<Scalar>(cfg_.beta2);
      const Scalar step = static_cast<Scalar>(lr / bc1);
      const Scalar sqrt_bc2 = static_cast<Scalar>(std::sqrt(bc2));
      const Scalar eps = static_cast<Scalar>(cfg_.eps);
      for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i].param;
        if (!p.trainable) continue;
        nn::Mat<Scalar> g = p.grad;
        if (cfg_.weight_decay > 0) g += static_cast<Scalar>(cfg_.weight_decay) * p.value;
        m_[i] = b1 * m_[i] + (1 - b1) * g;
        v_[i] = b2 * v_[i] + (1 - b2) * g.cwiseAbs2();
        p.value.array() -= step * m_[i].array() / (v_[i].array().sqrt() / sqrt_bc2 + eps);
      }
    } else {
      const Scalar mom = static_cast<Scalar>(cfg_.momentum);
      for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i].param;
        if (!p.trainable) continue;
        nn::Mat<Scalar> g = p.grad;
        if (cfg_.weight_decay > 0) g += static_cast<Scalar>(cfg_.weight_decay) * p.value;
        m_[i] = mom * m_[i] + g;
        p.value -= lr_s * m_[i];
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<nn::NamedParam<Scalar>> params_;
  std::vector<nn::Mat<Scalar>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace strfew
