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
#include <stdexcept>
#include <vector>

namespace strfew {

/// 8-bit interleaved raster, row-major, `channels` bytes per pixel.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 1 || h < 1 || (c != 1 && c != 3)) {
      throw std::invalid_argument("raster dimensions must be >= 1 with 1 or 3 channels");
    }
  }

  bool empty() const { return pixels.empty(); }

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

inline std::uint8_t clamp_u8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

/// Luma conversion (ITU-R 601 weights); single-channel input is returned as is.
Raster to_gray(const Raster& src);

/// Bilinear resize with pixel-center alignment and edge clamping. Resizing to
/// the same dimensions returns an exact copy.
Raster resize_bilinear(const Raster& src, int width, int height);

/// Sample channel `c` at continuous pixel coordinates with bilinear
/// interpolation and border replication.
double sample_bilinear(const Raster& src, double x, double y, int c);

}  // namespace strfew
