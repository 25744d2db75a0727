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

#include <array>
#include <string>
#include <utility>

#include "strfew/core/random.hpp"
#include "strfew/core/raster.hpp"

namespace strfew {

enum class AugmentKind { kBlur, kCrop, kRot };

/// Intensities for the Blur/Crop/Rot training augmentations. Each enabled
/// augmentation draws its strength per sample: blur radius in [0, max],
/// rotation angle in [-max, +max] degrees, crop retention in [min, 100] %.
struct AugmentPolicy {
  double blur_max_radius = 0.0;  // 0 disables
  double crop_min_pct = 100.0;   // 100 disables
  double rot_max_deg = 0.0;      // 0 disables

  static AugmentPolicy none() { return {}; }
  static AugmentPolicy crnn_best() { return {0.0, 90.0, 15.0}; }
  static AugmentPolicy trba_best() { return {5.0, 99.0, 0.0}; }
  /// "none", "crnn-best" or "trba-best".
  static AugmentPolicy preset(const std::string& name);

  bool is_identity() const {
    return blur_max_radius == 0.0 && crop_min_pct == 100.0 && rot_max_deg == 0.0;
  }
  void validate() const;
};

/// Apply one augmentation at a fixed strength. Output dimensions always equal
/// input dimensions, and strength 0 (blur, rot) or 100 (crop) returns the
/// input unchanged.
///  - blur: Gaussian with standard deviation `strength` px, border replicated.
///  - crop: keep a window of at least `strength` % of width and of height
///    (fractions drawn independently from `rng`), placed uniformly, resized back.
///  - rot: rotate by `strength` degrees (signed, counter-clockwise) about the
///    centre on the same canvas, bilinear, border replicated.
Raster apply_augmentation(const Raster& image, AugmentKind kind, double strength, Rng& rng);

/// One random view: rot, then crop, then blur, each with an independently
/// drawn strength.
Raster sample_view(const Raster& image, const AugmentPolicy& policy, Rng& rng);

/// Exact rotation by k * 90 degrees counter-clockwise (dimensions swap for odd k).
Raster rotate_quarter_turns(const Raster& image, int k);

/// Two-view policy for consistency/contrastive training: random resized crop,
/// color jitter, random grayscale and horizontal flip, resized to the model
/// input size.
struct ContrastivePolicy {
  double crop_scale_min = 0.2;
  double crop_scale_max = 1.0;
  double aspect_min = 3.0 / 4.0;  // multiplier on the source aspect ratio
  double aspect_max = 4.0 / 3.0;
  double jitter_p = 1.0;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.4;
  double grayscale_p = 0.2;
  double hflip_p = 0.5;
  int out_width = 100;
  int out_height = 32;

  void validate() const;
};

struct ContrastiveDraw {
  bool jittered = false;
  bool grayscale = false;
  bool flipped = false;
  int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;
};

Raster contrastive_view(const Raster& image, const ContrastivePolicy& policy, Rng& rng,
                        ContrastiveDraw* draw = nullptr);

std::pair<Raster, Raster> contrastive_views(const Raster& image, const ContrastivePolicy& policy,
                                            Rng& rng,
                                            std::array<ContrastiveDraw, 2>* draws = nullptr);

}  // namespace strfew
