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

#include <filesystem>

#include "strfew/core/raster.hpp"

namespace strfew {

/// Decode a PGM/PPM (binary P5/P6) or PNG file. Throws std::runtime_error on
/// unreadable or malformed input. PNG alpha is dropped and 16-bit samples are
/// reduced to 8 bits.
Raster decode_image(const std::filesystem::path& path);

/// Write binary PGM (1 channel) or PPM (3 channels).
void write_pnm(const Raster& image, const std::filesystem::path& path);

}  // namespace strfew
