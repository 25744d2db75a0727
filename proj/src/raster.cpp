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

#include "strfew/core/raster.hpp"

#include <algorithm>
#include <cmath>

namespace strfew {

Raster to_gray(const Raster& src) {
  if (src.channels == 1) return src;
  Raster out(src.width, src.height, 1);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const double v = 0.299 * src.at(x, y, 0) + 0.587 * src.at(x, y, 1) +
                       0.114 * src.at(x, y, 2);
      out.at(x, y) = clamp_u8(v);
    }
  }
  return out;
}

double sample_bilinear(const Raster& src, double x, double y, int c) {
  x = std::clamp(x, 0.0, static_cast<double>(src.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(src.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, src.width - 1);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = src.at(x0, y0, c) * (1.0 - fx) + src.at(x1, y0, c) * fx;
  const double bot = src.at(x0, y1, c) * (1.0 - fx) + src.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bot * fy;
}

Raster resize_bilinear(const Raster& src, int width, int height) {
  if (src.empty()) throw std::invalid_argument("resize of empty raster");
  if (width == src.width && height == src.height) return src;
  Raster out(width, height, src.channels);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < src.channels; ++c) {
        out.at(x, y, c) = clamp_u8(sample_bilinear(src, fx, fy, c));
      }
    }
  }
  return out;
}

}  // namespace strfew
