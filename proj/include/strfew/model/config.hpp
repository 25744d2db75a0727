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

#include <map>
#include <string>

#include "strfew/corpus/charset.hpp"
#include "strfew/model/backbone.hpp"
#include "strfew/model/tps.hpp"

namespace strfew {

enum class Transform { kNone, kTps };
enum class SequenceKind { kNone, kBiLstm };
enum class Predictor { kCtc, kAttention };

std::string to_string(Transform t);
std::string to_string(SequenceKind s);
std::string to_string(Predictor p);

struct ModelConfig {
  Transform transform = Transform::kNone;
  nn::BackboneKind features = nn::BackboneKind::kVgg7;
  SequenceKind sequence = SequenceKind::kBiLstm;
  Predictor predictor = Predictor::kCtc;
  int sequence_layers = 2;
  int hidden = 256;
  int attention_hidden = 256;
  nn::TpsConfig tps;
  int rotation_hidden = 256;
  int embedding_dim = 128;
  std::string charset = Charset::standard().chars();

  static ModelConfig crnn();
  static ModelConfig trba();
  /// Test-scale variants on the three-layer backbone.
  static ModelConfig mini_crnn();
  static ModelConfig mini_trba();
  static ModelConfig preset(const std::string& name);

  int num_classes() const;
  int feature_dim() const;
  int context_dim() const;
  Charset make_charset() const;

  /// Applies key=value overrides; unknown keys and bad values throw
  /// std::invalid_argument naming the key.
  void apply(const std::map<std::string, std::string>& kv);
  void validate() const;

  /// Canonical key=value text, one per line, fixed key order.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  /// Hex FNV-1a 64 of to_text().
  std::string digest() const;
};

}  // namespace strfew
