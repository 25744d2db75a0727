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
#include <optional>
#include <string>
#include <vector>

#include "strfew/core/random.hpp"
#include "strfew/corpus/manifest.hpp"
#include "strfew/corpus/sample.hpp"

namespace strfew {

/// Ranges for per-render jitter. Each render draws uniformly within them.
struct ToyJitter {
  double dot_width_min = 2.2, dot_width_max = 3.2;    // pixels per glyph dot, horizontal
  double dot_height_min = 3.0, dot_height_max = 3.9;  // pixels per glyph dot, vertical
  double spacing_min = 0.6, spacing_max = 1.8;        // gap between glyphs, in dots
  double rotation_max_deg = 3.0;
  double shear_max = 0.2;
  double noise_max = 12.0;       // Gaussian noise sigma upper bound, grey levels
  double min_contrast = 80.0;    // minimum |foreground - background|
  double invert_probability = 0.25;
  double stroke_min = 0.35;      // ink threshold softness, lower is bolder
  double stroke_max = 0.6;
};

struct ToyCorpusSpec {
  std::vector<std::string> vocabulary;
  int samples_per_word = 20;
  /// Renders per word in the unlabeled twin; 0 disables it.
  int unlabeled_per_word = 0;
  ToyJitter jitter;
  std::uint64_t seed = 0;
  std::string dataset = "toy";
  std::string unlabeled_dataset = "toy_unlabeled";
  int height = 32;

  static std::vector<std::string> default_vocabulary();
  void validate() const;
};

/// Renders one word. Throws std::invalid_argument naming any character
/// without a bundled glyph.
Raster render_word(const std::string& word, const ToyJitter& jitter, int height, Rng& rng);

/// Labeled renders, word-major: samples_per_word renders of word 0, then
/// word 1, and so on. Ids are "<dataset>/<word index>_<render index>".
std::vector<LabeledSample> render_toy_labeled(const ToyCorpusSpec& spec);
/// Fresh renders from an independent stream, labels stripped.
std::vector<UnlabeledSample> render_toy_unlabeled(const ToyCorpusSpec& spec);

struct ToyCorpus {
  DatasetManifest labeled;
  std::optional<DatasetManifest> unlabeled;
};

/// Writes images as PGM under `out/images` plus `labeled.jsonl` and, when
/// enabled, `unlabeled.jsonl`. Image paths in the manifests are relative to
/// `out`.
ToyCorpus render_toy_corpus(const ToyCorpusSpec& spec, const std::filesystem::path& out);

}  // namespace strfew
