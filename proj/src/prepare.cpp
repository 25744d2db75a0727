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

#include "strfew/corpus/prepare.hpp"

#include <fstream>
#include <unordered_map>

#include "strfew/corpus/image_io.hpp"

namespace strfew {

namespace fs = std::filesystem;

FilterPolicy policy_for(const PrepareOptions& options, const std::string& dataset, bool labeled) {
  auto it = options.policies.find(dataset);
  return it != options.policies.end() ? it->second : default_filter_policy(dataset, labeled);
}

PrepareReport prepare_corpus(const DatasetManifest& manifest, const fs::path& out, const PrepareOptions& options,
                             const Charset& charset) {
  options.split.validate();
  PrepareReport report;

  // Decode everything first so decode failures are reported together.
  std::vector<PackItem> items;
  std::vector<std::string> failed;
  for (const auto& e : manifest.entries) {
    fs::path p = e.image;
    if (p.is_relative() && !options.image_root.empty()) p = options.image_root / p;
    PackItem item;
    try {
      item.image = decode_image(p);
    } catch (const std::exception&) {
      failed.push_back(e.id);
      continue;
    }
    auto& r = item.record;
    r.id = e.id;
    r.dataset = e.dataset;
    r.split = e.split.value_or("");
    r.label = e.label;
    r.source = e.image;
    r.scene = e.scene;
    r.confidence = e.confidence;
    r.width = item.image.width;
    r.height = item.image.height;
    r.channels = item.image.channels;
    items.push_back(std::move(item));
  }
  if (!failed.empty()) {
    std::string msg = "failed to decode " + std::to_string(failed.size()) + " image(s):";
    for (const auto& id : failed) msg += " " + id;
    throw PackError(msg);
  }

  std::vector<PackItem> kept;
  for (auto& item : items) {
    const auto& r = item.record;
    const bool labeled = r.label.has_value();
    const FilterPolicy policy = policy_for(options, r.dataset, labeled);
    policy.validate();
    const std::string* label = labeled ? &*r.label : nullptr;
    auto rule = first_rejecting_rule(label, item.image.width, item.image.height, policy, charset);
    auto& counts = report.rejected[r.dataset];
    if (rule) {
      ++counts[static_cast<int>(*rule)];
      report.rejection_log.push_back({r.id, *rule});
    } else {
      kept.push_back(std::move(item));
    }
  }

  if (options.dedup_against_eval) {
    std::unordered_map<std::string, std::string> eval_keys;
    for (const auto& item : kept) {
      if (item.record.split == "eval") eval_keys.emplace(pixel_content_key(item.image, item.record.id), item.record.id);
    }
    std::vector<PackItem> unique;
    for (auto& item : kept) {
      if (item.record.split != "eval") {
        auto it = eval_keys.find(pixel_content_key(item.image, item.record.id));
        if (it != eval_keys.end()) {
          report.duplicates.emplace_back(item.record.id, it->second);
          continue;
        }
      }
      unique.push_back(std::move(item));
    }
    kept = std::move(unique);
  }

  // Labeled entries without a hint are split per dataset; unlabeled ones train.
  std::map<std::string, std::vector<std::size_t>> unsplit;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto& r = kept[i].record;
    if (!r.split.empty()) continue;
    if (r.label) {
      unsplit[r.dataset].push_back(i);
    } else {
      r.split = "train";
    }
  }
  for (auto& [dataset, idx] : unsplit) {
    auto parts = split_dataset(idx, options.split);
    for (auto& w : parts.warnings) report.warnings.push_back(dataset + ": " + w);
    for (auto i : parts.train) kept[i].record.split = "train";
    for (auto i : parts.valid) kept[i].record.split = "valid";
    for (auto i : parts.eval) kept[i].record.split = "eval";
  }

  for (const auto& item : kept) ++report.counts[{item.record.dataset, item.record.split}];
  write_packed(kept, out);

  std::ofstream f(out / "rejections.csv");
  f << "id,rule\n";
  for (const auto& r : report.rejection_log) f << r.id << "," << to_string(r.rule) << "\n";
  for (const auto& [id, other] : report.duplicates) f << id << ",duplicate_of:" << other << "\n";
  if (!f) throw PackError("cannot write " + (out / "rejections.csv").string());
  return report;
}

}  // namespace strfew
