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

#include "strfew/corpus/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace strfew {

using nlohmann::json;

std::map<std::string, std::size_t> DatasetManifest::counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& e : entries) ++out[e.dataset];
  return out;
}

bool DatasetManifest::is_labeled(const std::string& dataset) const {
  for (const auto& e : entries) {
    if (e.dataset == dataset) return e.label.has_value();
  }
  return false;
}

namespace {

std::string require_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ManifestError(line, std::string("missing key \"") + key + "\"");
  if (!it->is_string()) throw ManifestError(line, std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

int require_dim(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ManifestError(line, std::string("missing key \"") + key + "\"");
  if (!it->is_number_integer() || it->get<long long>() < 1) {
    throw ManifestError(line, std::string("\"") + key + "\" must be a positive integer");
  }
  return static_cast<int>(it->get<long long>());
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text) {
  DatasetManifest m;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  std::map<std::string, bool> labeled;
  std::map<std::string, std::size_t> ordinal;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ManifestError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ManifestError(line, "record must be a JSON object");
    if (m.entries.empty() && obj.contains("format_version") && !obj.contains("image")) {
      if (!obj["format_version"].is_number_integer()) {
        throw ManifestError(line, "format_version must be an integer");
      }
      m.format_version = obj["format_version"].get<int>();
      if (m.format_version > DatasetManifest::kFormatVersion) {
        throw ManifestError(line, "unsupported format_version " + std::to_string(m.format_version));
      }
      continue;
    }
    ManifestEntry e;
    e.image = require_string(obj, "image", line);
    e.dataset = require_string(obj, "dataset", line);
    auto lab = obj.find("label");
    if (lab == obj.end()) throw ManifestError(line, "missing key \"label\"");
    if (lab->is_string()) {
      e.label = lab->get<std::string>();
    } else if (!lab->is_null()) {
      throw ManifestError(line, "\"label\" must be a string or null");
    }
    auto [it, inserted] = labeled.emplace(e.dataset, e.label.has_value());
    if (!inserted && it->second != e.label.has_value()) {
      throw ManifestError(line, "dataset \"" + e.dataset +
                                    "\" mixes labeled and unlabeled records");
    }
    e.width = require_dim(obj, "width", line);
    e.height = require_dim(obj, "height", line);
    if (auto s = obj.find("split"); s != obj.end() && !s->is_null()) {
      if (!s->is_string()) throw ManifestError(line, "\"split\" must be a string");
      e.split = s->get<std::string>();
    }
    if (auto s = obj.find("scene"); s != obj.end() && s->is_string()) e.scene = s->get<std::string>();
    if (auto c = obj.find("confidence"); c != obj.end() && !c->is_null()) {
      if (!c->is_number()) throw ManifestError(line, "\"confidence\" must be a number");
      e.confidence = c->get<double>();
    }
    if (auto s = obj.find("id"); s != obj.end() && s->is_string()) {
      e.id = s->get<std::string>();
    } else {
      e.id = e.dataset + "/" + std::to_string(ordinal[e.dataset]);
    }
    ++ordinal[e.dataset];
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out = json{{"format_version", manifest.format_version}}.dump() + "\n";
  for (const auto& e : manifest.entries) {
    json obj;
    obj["image"] = e.image;
    obj["label"] = e.label ? json(*e.label) : json(nullptr);
    obj["dataset"] = e.dataset;
    obj["width"] = e.width;
    obj["height"] = e.height;
    if (e.split) obj["split"] = *e.split;
    obj["id"] = e.id;
    if (!e.scene.empty()) obj["scene"] = e.scene;
    if (e.confidence) obj["confidence"] = *e.confidence;
    out += obj.dump() + "\n";
  }
  return out;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << serialize_manifest(manifest);
}

}  // namespace strfew
