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

#include <cmath>

#include "doctest.h"
#include "strfew/augment.hpp"
#include "support/testing.hpp"

using namespace strfew;
using strfew::testing::random_raster;

namespace {

int max_abs_diff(const Raster& a, const Raster& b) {
  REQUIRE(a.pixels.size() == b.pixels.size());
  int d = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) d = std::max(d, std::abs(int(a.pixels[i]) - int(b.pixels[i])));
  return d;
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("zero-intensity augmentations are bit-exact identities") {
  Rng rng(1);
  for (int c : {1, 3}) {
    const Raster img = random_raster(rng, 37, 13, c);
    CHECK(apply_augmentation(img, AugmentKind::kBlur, 0.0, rng) == img);
    CHECK(apply_augmentation(img, AugmentKind::kCrop, 100.0, rng) == img);
    CHECK(apply_augmentation(img, AugmentKind::kRot, 0.0, rng) == img);
    CHECK(sample_view(img, AugmentPolicy::none(), rng) == img);
  }
}

TEST_CASE("out-of-range strengths are rejected") {
  Rng rng(1);
  const Raster img(10, 10, 1, 50);
  CHECK_THROWS_AS(apply_augmentation(img, AugmentKind::kBlur, -1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(apply_augmentation(img, AugmentKind::kCrop, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(apply_augmentation(img, AugmentKind::kCrop, 101.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(apply_augmentation(img, AugmentKind::kRot, 400.0, rng), std::invalid_argument);
  CHECK_THROWS(AugmentPolicy{-1.0, 100.0, 0.0}.validate());
  CHECK_THROWS(AugmentPolicy::preset("heavy"));
}

TEST_CASE("property: augmentations preserve dimensions") {
  Rng rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const Raster img = random_raster(rng, rng.uniform_int(3, 60), rng.uniform_int(3, 40), trial % 2 ? 3 : 1);
    const Raster b = apply_augmentation(img, AugmentKind::kBlur, rng.uniform(0.1, 5.0), rng);
    const Raster c = apply_augmentation(img, AugmentKind::kCrop, rng.uniform(50.0, 99.9), rng);
    const Raster r = apply_augmentation(img, AugmentKind::kRot, rng.uniform(-30.0, 30.0), rng);
    for (const Raster* out : {&b, &c, &r}) {
      CHECK(out->width == img.width);
      CHECK(out->height == img.height);
      CHECK(out->channels == img.channels);
    }
  }
}

TEST_CASE("two quarter turns equal a half turn within one level") {
  Rng rng(3);
  for (int n : {8, 15, 32}) {
    const Raster img = random_raster(rng, n, n);
    const Raster twice = apply_augmentation(apply_augmentation(img, AugmentKind::kRot, 90.0, rng),
                                            AugmentKind::kRot, 90.0, rng);
    const Raster once = apply_augmentation(img, AugmentKind::kRot, 180.0, rng);
    CHECK(max_abs_diff(twice, once) <= 1);
  }
}

TEST_CASE("exact quarter turns") {
  Rng rng(4);
  const Raster img = random_raster(rng, 5, 3, 3);
  const Raster r1 = rotate_quarter_turns(img, 1);
  CHECK(r1.width == 3);
  CHECK(r1.height == 5);
  // Counter-clockwise: the top-right pixel moves to the top-left.
  CHECK(r1.at(0, 0, 1) == img.at(4, 0, 1));
  CHECK(rotate_quarter_turns(r1, 3) == img);
  CHECK(rotate_quarter_turns(rotate_quarter_turns(img, 2), 2) == img);
  CHECK(rotate_quarter_turns(img, 4) == img);
}

TEST_CASE("blur smooths a step edge and keeps constant images") {
  Rng rng(5);
  const Raster flat(20, 10, 1, 77);
  CHECK(apply_augmentation(flat, AugmentKind::kBlur, 3.0, rng) == flat);
  Raster step(20, 10, 1, 0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 10; x < 20; ++x) step.at(x, y) = 255;
  }
  const Raster b = apply_augmentation(step, AugmentKind::kBlur, 2.0, rng);
  CHECK(b.at(9, 5) > 0);
  CHECK(b.at(10, 5) < 255);
  CHECK(b.at(0, 5) == 0);
}

TEST_CASE("sample_view is reproducible under a seed") {
  Rng data(6);
  const Raster img = random_raster(data, 40, 16);
  const AugmentPolicy p = AugmentPolicy::crnn_best();
  Rng a(42), b(42), c(43);
  const Raster va = sample_view(img, p, a);
  CHECK(va == sample_view(img, p, b));
  CHECK_FALSE(va == sample_view(img, p, c));
}

TEST_CASE("named presets") {
  const auto crnn = AugmentPolicy::preset("crnn-best");
  CHECK(crnn.blur_max_radius == 0.0);
  CHECK(crnn.crop_min_pct == 90.0);
  CHECK(crnn.rot_max_deg == 15.0);
  const auto trba = AugmentPolicy::preset("trba-best");
  CHECK(trba.blur_max_radius == 5.0);
  CHECK(trba.crop_min_pct == 99.0);
  CHECK(trba.rot_max_deg == 0.0);
  CHECK(AugmentPolicy::preset("none").is_identity());
}

TEST_CASE("contrastive views: degenerate policy returns the resized input twice") {
  Rng data(7);
  const Raster img = random_raster(data, 60, 20, 3);
  ContrastivePolicy p;
  p.crop_scale_min = p.crop_scale_max = 1.0;
  p.aspect_min = p.aspect_max = 1.0;
  p.jitter_p = p.grayscale_p = p.hflip_p = 0.0;
  Rng rng(1);
  const auto [a, b] = contrastive_views(img, p, rng);
  CHECK(a == b);
  CHECK(a.width == 100);
  CHECK(a.height == 32);
  CHECK(a == resize_bilinear(img, 100, 32));
}

TEST_CASE("contrastive views are reproducible and sized to the model input") {
  Rng data(8);
  const Raster img = random_raster(data, 45, 30, 3);
  ContrastivePolicy p;
  Rng a(5), b(5);
  const auto x = contrastive_views(img, p, a);
  const auto y = contrastive_views(img, p, b);
  CHECK(x.first == y.first);
  CHECK(x.second == y.second);
  CHECK(x.first.width == 100);
  CHECK(x.second.height == 32);
}

TEST_CASE("grayscale frequency matches its probability") {
  Rng data(9);
  const Raster img = random_raster(data, 30, 12, 3);
  ContrastivePolicy p;
  p.grayscale_p = 0.2;
  Rng rng(10);
  int hits = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    ContrastiveDraw d;
    contrastive_view(img, p, rng, &d);
    hits += d.grayscale;
  }
  const double sigma = std::sqrt(n * 0.2 * 0.8);
  CHECK(std::abs(hits - n * 0.2) <= 3 * sigma);
}

}  // TEST_SUITE
