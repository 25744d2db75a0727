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
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace strfew {

/// One manifest record. Wire format: one JSON object per line with keys
/// `image`, `label` (string or null), `dataset`, `width`, `height` and the
/// optional `split`, `id`, `scene`, `confidence`. An optional first line
/// `{"format_version": N}` declares the version.
struct ManifestEntry {
  std::string image;
  std::optional<std::string> label;
  std::string dataset;
  int width = 0;
  int height = 0;
  std::optional<std::string> split;
  std::string id;
  std::string scene;
  std::optional<double> confidence;
};

struct DatasetManifest {
  static constexpr int kFormatVersion = 1;

  std::vector<ManifestEntry> entries;
  int format_version = kFormatVersion;

  std::map<std::string, std::size_t> counts() const;
  /// True iff the named dataset carries labels (all labels non-null).
  bool is_labeled(const std::string& dataset) const;
};

class ManifestError : public std::runtime_error {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : std::runtime_error("manifest line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text);
std::string serialize_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace strfew
