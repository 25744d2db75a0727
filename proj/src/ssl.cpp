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

#include "strfew/ssl.hpp"

#include "strfew/augment.hpp"

namespace strfew {

std::pair<std::vector<Raster>, std::vector<int>> make_rotation_batch(const std::vector<Raster>& images) {
  std::pair<std::vector<Raster>, std::vector<int>> out;
  out.first.reserve(images.size() * 4);
  out.second.reserve(images.size() * 4);
  for (const Raster& img : images) {
    for (int r = 0; r < 4; ++r) {
      Raster rot = r == 0 ? img : rotate_quarter_turns(img, r);
      if (rot.width != img.width || rot.height != img.height) rot = resize_bilinear(rot, img.width, img.height);
      out.first.push_back(std::move(rot));
      out.second.push_back(r);
    }
  }
  return out;
}

template class NegativeQueue<float>;

}  // namespace strfew
