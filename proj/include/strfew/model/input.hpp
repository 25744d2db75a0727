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

#include <vector>

#include "strfew/core/raster.hpp"
#include "strfew/model/backbone.hpp"

namespace strfew {

/// Converts rasters to a model batch: grayscale, resized to 32x100 when
/// needed, values mapped from [0, 255] to [-1, 1].
template <typename Scalar>
nn::Tensor4<Scalar> to_input(const std::vector<Raster>& images) {
  constexpr int H = nn::Backbone<Scalar>::kInputHeight, W = nn::Backbone<Scalar>::kInputWidth;
  nn::Tensor4<Scalar> out(static_cast<int>(images.size()), 1, H, W);
  for (std::size_t i = 0; i < images.size(); ++i) {
    Raster g = to_gray(images[i]);
    if (g.width != W || g.height != H) g = resize_bilinear(g, W, H);
    Scalar* dst = out.data.data() + static_cast<Eigen::Index>(i) * out.image_size();
    for (std::size_t p = 0; p < g.pixels.size(); ++p) {
      dst[p] = static_cast<Scalar>(g.pixels[p]) / Scalar(127.5) - Scalar(1);
    }
  }
  return out;
}

}  // namespace strfew
