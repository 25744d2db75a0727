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
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "strfew/core/raster.hpp"
#include "strfew/corpus/manifest.hpp"
#include "strfew/corpus/sample.hpp"

namespace strfew {

/// Metadata of one packed sample. Offsets address `payload.bin`.
struct PackedRecord {
  std::string id;
  std::string dataset;
  std::string split;
  std::optional<std::string> label;
  std::string source;
  std::string scene;
  std::optional<double> confidence;
  int width = 0;
  int height = 0;
  int channels = 1;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

struct PackItem {
  PackedRecord record;  // offset/length are assigned by the writer
  Raster image;
};

class PackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kPackIndexName[] = "index";
inline constexpr char kPackPayloadName[] = "payload.bin";
inline constexpr std::uint32_t kPackFormatVersion = 1;

/// Write a packed dataset. The payload goes first and the index is renamed
/// into place last, so an interrupted pack never leaves a loadable directory.
void write_packed(const std::vector<PackItem>& items, const std::filesystem::path& dir);

/// Read-only view of a packed dataset; safe for concurrent readers.
class PackedDataset {
 public:
  static PackedDataset open(const std::filesystem::path& dir);

  std::size_t size() const { return records_.size(); }
  const std::vector<PackedRecord>& records() const { return records_; }
  const std::filesystem::path& directory() const { return dir_; }

  std::optional<std::size_t> find(const std::string& id) const;
  Raster image(std::size_t index) const;
  Raster image(const std::string& id) const;

  /// Sample counts keyed by (dataset, split).
  std::map<std::pair<std::string, std::string>, std::size_t> counts() const;
  std::vector<std::string> datasets() const;

  /// Materialise labeled samples, optionally restricted to a split/dataset.
  std::vector<LabeledSample> labeled(const std::optional<std::string>& split = std::nullopt,
                                     const std::optional<std::string>& dataset = std::nullopt) const;
  std::vector<UnlabeledSample> unlabeled(
      const std::optional<std::string>& split = std::nullopt,
      const std::optional<std::string>& dataset = std::nullopt) const;

 private:
  struct Payload;
  std::filesystem::path dir_;
  std::vector<PackedRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::shared_ptr<Payload> payload_;
};

/// Decode every manifest image (paths relative to `image_root` unless
/// absolute) and pack them with their split hints. Throws PackError listing
/// every id whose image failed to decode.
PackedDataset pack_dataset(const DatasetManifest& manifest, const std::filesystem::path& out,
                           const std::filesystem::path& image_root = {});

}  // namespace strfew
