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

#include "strfew/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "strfew/corpus/image_io.hpp"
#include "toy_font.hpp"

namespace strfew {

std::vector<std::string> ToyCorpusSpec::default_vocabulary() {
  return {"the",    "and",    "open",   "stop",   "exit",   "hotel",  "pizza",   "coffee", "bank",   "sale",
          "market", "street", "park",   "taxi",   "bus",    "police", "city",    "road",   "north",  "south",
          "museum", "garden", "school", "river",  "bridge", "center", "office",  "store",  "music",  "cinema",
          "bakery", "train",  "metro",  "house",  "green",  "water",  "light",   "night",  "tower",  "sport",
          "club",   "royal",  "grand",  "shop",   "BAR",    "Cafe",   "OPEN24",  "Route66", "KING",  "Bus7"};
}

void ToyCorpusSpec::validate() const {
  if (vocabulary.empty()) throw std::invalid_argument("toy vocabulary is empty");
  if (samples_per_word < 1) throw std::invalid_argument("samples_per_word must be positive");
  if (unlabeled_per_word < 0) throw std::invalid_argument("unlabeled_per_word must be non-negative");
  for (const auto& w : vocabulary) {
    if (w.empty() || w.size() > 25) throw std::invalid_argument("toy word must have 1 to 25 characters: '" + w + "'");
    for (const char c : w) {
      if (!toy::find_glyph(c)) throw std::invalid_argument(std::string("no glyph for character '") + c + "' in '" + w + "'");
    }
  }
}

Raster render_word(const std::string& word, const ToyJitter& j, int height, Rng& rng) {
  std::vector<const toy::Glyph*> glyphs;
  for (const char c : word) {
    const toy::Glyph* g = toy::find_glyph(c);
    if (!g) throw std::invalid_argument(std::string("no glyph for character '") + c + "'");
    glyphs.push_back(g);
  }
  const double dw = rng.uniform(j.dot_width_min, j.dot_width_max);
  const double dh = std::min(rng.uniform(j.dot_height_min, j.dot_height_max), (height - 4) / 7.0);
  const double gap = rng.uniform(j.spacing_min, j.spacing_max);
  const double rot = rng.uniform(-j.rotation_max_deg, j.rotation_max_deg) * std::numbers::pi / 180.0;
  const double shear = rng.uniform(-j.shear_max, j.shear_max);
  const double noise = rng.uniform(0.0, j.noise_max);
  const double threshold = rng.uniform(j.stroke_min, j.stroke_max);
  double bg = rng.uniform(j.min_contrast, 255.0);
  double fg = rng.uniform(0.0, bg - j.min_contrast);
  if (rng.bernoulli(j.invert_probability)) std::swap(bg, fg);

  // Word layout in dot units: glyph i occupies [i * (5 + gap), +5) x [0, 7).
  const double pitch = toy::kGlyphCols + gap;
  const double text_w = pitch * static_cast<double>(glyphs.size()) - gap;
  const double margin_x = rng.uniform(1.0, 4.0), margin_y = (height - 7.0 * dh) / 2.0;
  const int width = std::max(height, static_cast<int>(std::ceil(text_w * dw + 2 * margin_x)));
  const double cx = width / 2.0, cy = height / 2.0 + rng.uniform(-1.0, 1.0);
  const double cos_r = std::cos(rot), sin_r = std::sin(rot);

  auto ink_at = [&](int gi, int r, int c) -> double {
    if (r < 0 || r >= toy::kGlyphRows || c < 0 || c >= toy::kGlyphCols) return 0.0;
    return glyphs[static_cast<std::size_t>(gi)]->ink[r][c] ? 1.0 : 0.0;
  };
  // Coverage at a point in dot units, bilinear over dot centres.
  auto coverage = [&](double u, double v) -> double {
    if (u < -1 || v < -1 || u > text_w + 1 || v > 8) return 0.0;
    const int gi = std::clamp(static_cast<int>(std::floor((u + gap / 2) / pitch)), 0,
                              static_cast<int>(glyphs.size()) - 1);
    const double lu = u - gi * pitch - 0.5, lv = v - 0.5;
    const int c0 = static_cast<int>(std::floor(lu)), r0 = static_cast<int>(std::floor(lv));
    const double fu = lu - c0, fv = lv - r0;
    return (ink_at(gi, r0, c0) * (1 - fu) + ink_at(gi, r0, c0 + 1) * fu) * (1 - fv) +
           (ink_at(gi, r0 + 1, c0) * (1 - fu) + ink_at(gi, r0 + 1, c0 + 1) * fu) * fv;
  };

  Raster img(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Inverse of: rotate about the centre, then shear, then scale to dots.
      const double px = x + 0.5 - cx, py = y + 0.5 - cy;
      const double rx = cos_r * px + sin_r * py, ry = -sin_r * px + cos_r * py;
      const double sx = rx - shear * ry;
      const double u = (sx + cx - margin_x) / dw, v = (ry + cy - margin_y) / dh;
      const double cov = coverage(u, v);
      const double ink = std::clamp((cov - threshold) / 0.3 + 0.5, 0.0, 1.0);
      img.at(x, y) = clamp_u8(bg + (fg - bg) * ink + noise * rng.normal());
    }
  }
  return img;
}

namespace {

std::string render_id(const std::string& dataset, std::size_t w, int r) {
  return dataset + "/" + std::to_string(w) + "_" + std::to_string(r);
}

}  // namespace

std::vector<LabeledSample> render_toy_labeled(const ToyCorpusSpec& spec) {
  spec.validate();
  std::vector<LabeledSample> out;
  for (std::size_t w = 0; w < spec.vocabulary.size(); ++w) {
    for (int r = 0; r < spec.samples_per_word; ++r) {
      Rng rng(Rng::derive(Rng::derive(spec.seed, 2 * w), static_cast<std::uint64_t>(r)));
      out.push_back(LabeledSample{render_word(spec.vocabulary[w], spec.jitter, spec.height, rng), spec.vocabulary[w],
                                  spec.dataset, render_id(spec.dataset, w, r), ""});
    }
  }
  return out;
}

std::vector<UnlabeledSample> render_toy_unlabeled(const ToyCorpusSpec& spec) {
  spec.validate();
  std::vector<UnlabeledSample> out;
  for (std::size_t w = 0; w < spec.vocabulary.size(); ++w) {
    for (int r = 0; r < spec.unlabeled_per_word; ++r) {
      Rng rng(Rng::derive(Rng::derive(spec.seed, 2 * w + 1), static_cast<std::uint64_t>(r)));
      out.push_back(UnlabeledSample{render_word(spec.vocabulary[w], spec.jitter, spec.height, rng),
                                    spec.unlabeled_dataset, render_id(spec.unlabeled_dataset, w, r), ""});
    }
  }
  return out;
}

ToyCorpus render_toy_corpus(const ToyCorpusSpec& spec, const std::filesystem::path& out) {
  std::filesystem::create_directories(out / "images");
  ToyCorpus corpus;
  auto file_name = [](const std::string& id) {
    std::string s = id;
    std::replace(s.begin(), s.end(), '/', '_');
    return "images/" + s + ".pgm";
  };
  for (const auto& s : render_toy_labeled(spec)) {
    const std::string rel = file_name(s.id);
    write_pnm(s.image, out / rel);
    ManifestEntry e;
    e.image = rel;
    e.label = s.label;
    e.dataset = s.dataset;
    e.width = s.image.width;
    e.height = s.image.height;
    e.id = s.id;
    corpus.labeled.entries.push_back(std::move(e));
  }
  save_manifest(corpus.labeled, out / "labeled.jsonl");
  if (spec.unlabeled_per_word > 0) {
    DatasetManifest m;
    for (const auto& s : render_toy_unlabeled(spec)) {
      const std::string rel = file_name(s.id);
      write_pnm(s.image, out / rel);
      ManifestEntry e;
      e.image = rel;
      e.dataset = s.dataset;
      e.width = s.image.width;
      e.height = s.image.height;
      e.id = s.id;
      m.entries.push_back(std::move(e));
    }
    save_manifest(m, out / "unlabeled.jsonl");
    corpus.unlabeled = std::move(m);
  }
  return corpus;
}

}  // namespace strfew
