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

#include "strfew/model/config.hpp"
#include "strfew/model/tensor.hpp"

namespace strfew {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters stored as float32 matrices keyed by name.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  std::int64_t iteration = 0;
  double val_accuracy = 0.0;
  std::string config_text;
  std::string digest;
  std::map<std::string, nn::Mat<float>> blobs;

  ModelConfig config() const { return ModelConfig::from_text(config_text); }
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Captures every parameter whose name starts with `prefix`.
template <typename Model>
Checkpoint make_checkpoint(Model& model, const ModelConfig& cfg, std::int64_t iteration, double val_acc,
                           const std::string& prefix = "") {
  Checkpoint c;
  c.iteration = iteration;
  c.val_accuracy = val_acc;
  c.config_text = cfg.to_text();
  c.digest = cfg.digest();
  model.visit([&](const std::string& name, auto& p) {
    if (name.rfind(prefix, 0) == 0) c.blobs[name] = p.value.template cast<float>();
  });
  return c;
}

/// Copies blobs into the model. The checkpoint's config digest must match
/// `cfg`. With `prefix` set, only parameters under it are loaded, and all of
/// those must be present; otherwise every model parameter must be present.
template <typename Model>
void load_into(Model& model, const ModelConfig& cfg, const Checkpoint& c, const std::string& prefix = "") {
  if (c.digest != cfg.digest()) {
    throw CheckpointError("checkpoint config digest " + c.digest + " does not match model digest " + cfg.digest());
  }
  model.visit([&](const std::string& name, auto& p) {
    if (name.rfind(prefix, 0) != 0) return;
    const auto it = c.blobs.find(name);
    if (it == c.blobs.end()) throw CheckpointError("checkpoint lacks parameter " + name);
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw CheckpointError("checkpoint parameter " + name + " has the wrong shape");
    }
    using S = typename std::decay_t<decltype(p.value)>::Scalar;
    p.value = it->second.template cast<S>();
  });
}

}  // namespace strfew
