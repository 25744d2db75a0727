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

#include "strfew/train/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "strfew/corpus/pack.hpp"
#include "strfew/sampler.hpp"

namespace strfew {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      const auto b = cur.find_first_not_of(" \t");
      if (b != std::string::npos) out.push_back(cur.substr(b, cur.find_last_not_of(" \t") - b + 1));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true|false, got '" + v + "'");
}

template <typename F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void apply_optim(OptimizerConfig& o, const std::string& key, const std::string& v, const std::string& full) {
  if (key == "kind" || key == "optimizer") o.kind = as_config_error([&] { return parse_optimizer(v); });
  else if (key == "max_lr") o.max_lr = to_real(full, v);
  else if (key == "beta1") o.beta1 = to_real(full, v);
  else if (key == "beta2") o.beta2 = to_real(full, v);
  else if (key == "eps") o.eps = to_real(full, v);
  else if (key == "momentum") o.momentum = to_real(full, v);
  else if (key == "weight_decay") o.weight_decay = to_real(full, v);
  else if (key == "clip_norm") o.clip_norm = to_real(full, v);
  else if (key == "total_iters" || key == "iters") o.total_iters = to_int(full, v);
  else if (key == "batch_size") o.batch_size = static_cast<int>(to_int(full, v));
  else if (key == "warmup_fraction") o.warmup_fraction = to_real(full, v);
  else if (key == "initial_div") o.initial_div = to_real(full, v);
  else if (key == "final_div") o.final_div = to_real(full, v);
  else throw ConfigError("unknown key: " + full);
}

}  // namespace

fs::path DataConfig::resolve(const fs::path& p) const {
  return p.is_relative() && !root.empty() ? root / p : p;
}

void RunConfig::validate() const {
  if (!(data.label_ratio > 0.0 && data.label_ratio <= 1.0)) throw ConfigError("data.label_ratio must be in (0, 1]");
  model.validate();
  recipe.validate();
  options.optim.validate();
  if (options.val_every < 1 || options.log_every < 1) throw ConfigError("val_every and log_every must be positive");
}

ConfigValues read_config_values(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  ConfigValues out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

void apply_override(ConfigValues& values, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || assignment.find('.') > eq) {
    throw ConfigError("override must look like section.key=value: " + assignment);
  }
  values[assignment.substr(0, eq)] = assignment.substr(eq + 1);
}

RunConfig build_run_config(const ConfigValues& values) {
  RunConfig rc;
  std::map<std::string, std::string> model_kv;
  std::map<std::string, std::string> aug_kv;
  if (auto it = values.find("model.preset"); it != values.end()) {
    try {
      rc.model = ModelConfig::preset(it->second);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  for (const auto& [full, v] : values) {
    const auto dot = full.find('.');
    const std::string section = full.substr(0, dot);
    const std::string key = full.substr(dot + 1);
    if (section == "data") {
      if (key == "root") rc.data.root = v;
      else if (key == "labeled") for (auto& p : split_list(v)) rc.data.labeled.emplace_back(p);
      else if (key == "unlabeled") for (auto& p : split_list(v)) rc.data.unlabeled.emplace_back(p);
      else if (key == "label_ratio") rc.data.label_ratio = to_real(full, v);
      else if (key == "remainder_unlabeled") rc.data.remainder_unlabeled = to_bool(full, v);
      else if (key == "valid_split") rc.data.valid_split = v;
      else throw ConfigError("unknown key: " + full);
    } else if (section == "model") {
      model_kv[key] = v;
    } else if (section == "optim") {
      apply_optim(rc.options.optim, key, v, full);
    } else if (section == "pretext") {
      apply_optim(rc.recipe.pretext_optim, key, v, full);
    } else if (section == "aug") {
      aug_kv[key] = v;
    } else if (section == "recipe") {
      auto& r = rc.recipe;
      if (key == "name") r.kind = as_config_error([&] { return parse_recipe(v); });
      else if (key == "init") r.init = as_config_error([&] { return parse_init(v); });
      else if (key == "init_checkpoint") r.init_checkpoint = v;
      else if (key == "alpha") r.alpha = to_real(full, v);
      else if (key == "ema_momentum") r.ema_momentum = to_real(full, v);
      else if (key == "queue_size") r.queue_size = static_cast<int>(to_int(full, v));
      else if (key == "tau") r.tau = to_real(full, v);
      else if (key == "min_confidence") r.min_confidence = to_real(full, v);
      else if (key == "fine_tune_iters") r.fine_tune_iters = to_int(full, v);
      else if (key == "val_every") rc.options.val_every = to_int(full, v);
      else if (key == "log_every") rc.options.log_every = to_int(full, v);
      else throw ConfigError("unknown key: " + full);
    } else if (section == "run") {
      if (key == "seed") rc.options.seed = static_cast<std::uint64_t>(to_int(full, v));
      else if (key == "workers") rc.options.workers = static_cast<int>(to_int(full, v));
      else throw ConfigError("unknown key: " + full);
    } else {
      throw ConfigError("unknown section: " + section);
    }
  }
  try {
    rc.model.apply(model_kv);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  auto& aug = rc.recipe.aug;
  if (auto it = aug_kv.find("preset"); it != aug_kv.end()) {
    aug = as_config_error([&] { return AugmentPolicy::preset(it->second); });
    rc.recipe.augmentation = it->second;
  }
  for (const auto& [key, v] : aug_kv) {
    if (key == "preset") continue;
    if (key == "blur_max_radius") aug.blur_max_radius = to_real("aug." + key, v);
    else if (key == "crop_min_pct") aug.crop_min_pct = to_real("aug." + key, v);
    else if (key == "rot_max_deg") aug.rot_max_deg = to_real("aug." + key, v);
    else throw ConfigError("unknown key: aug." + key);
    rc.recipe.augmentation = "custom";
  }
  try {
    rc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
  ConfigValues values = path.empty() ? ConfigValues{} : read_config_values(path);
  for (const auto& o : overrides) apply_override(values, o);
  return build_run_config(values);
}

TrainData load_train_data(const DataConfig& data, std::uint64_t seed) {
  TrainData out;
  std::uint64_t d = 0;
  for (const auto& p : data.labeled) {
    const auto packed = PackedDataset::open(data.resolve(p));
    for (const auto& name : packed.datasets()) {
      auto train = packed.labeled(std::string("train"), name);
      auto valid = packed.labeled(data.valid_split, name);
      out.valid.insert(out.valid.end(), valid.begin(), valid.end());
      if (train.empty()) continue;
      if (data.label_ratio < 1.0) {
        const auto keep = subsample_indices(train.size(), data.label_ratio, Rng::derive(seed, d));
        std::vector<bool> kept(train.size(), false);
        std::vector<LabeledSample> sub;
        for (auto i : keep) {
          kept[i] = true;
          sub.push_back(train[i]);
        }
        if (data.remainder_unlabeled) {
          std::vector<UnlabeledSample> rest;
          for (std::size_t i = 0; i < train.size(); ++i) {
            if (!kept[i]) rest.push_back({train[i].image, train[i].dataset + "_unlabeled", train[i].id, train[i].scene});
          }
          if (!rest.empty()) out.unlabeled.emplace_back(name + "_unlabeled", std::move(rest));
        }
        train = std::move(sub);
      }
      ++d;
      if (!train.empty()) out.labeled.emplace_back(name, std::move(train));
    }
  }
  for (const auto& p : data.unlabeled) {
    const auto packed = PackedDataset::open(data.resolve(p));
    for (const auto& name : packed.datasets()) {
      auto u = packed.unlabeled(std::string("train"), name);
      if (!u.empty()) out.unlabeled.emplace_back(name, std::move(u));
    }
  }
  return out;
}

std::map<std::string, FilterPolicy> load_filter_policies(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  std::map<std::string, FilterPolicy> out;
  for (const auto& [dataset, body] : tree) {
    bool labeled = true;
    if (auto v = body.get_optional<std::string>("labeled")) labeled = to_bool(dataset + ".labeled", *v);
    FilterPolicy p = default_filter_policy(dataset, labeled);
    for (const auto& [key, node] : body) {
      const std::string full = dataset + "." + key;
      const std::string v = node.data();
      if (key == "labeled") continue;
      if (key == "dont_care") {
        if (v == "pure_hash_runs") p.dont_care = DontCareMode::kPureHashRuns;
        else if (v == "hash3_and_4") p.dont_care = DontCareMode::kHash3And4;
        else if (v == "none") p.dont_care = DontCareMode::kNone;
        else throw ConfigError(full + ": expected pure_hash_runs|hash3_and_4|none");
      } else if (key == "exclude_star") {
        p.exclude_star_labels = to_bool(full, v);
      } else if (key == "charset_filter") {
        p.charset_filter = to_bool(full, v);
      } else if (key == "vertical") {
        if (v == "labeled") p.vertical_rule = VerticalRule::kLabeled;
        else if (v == "unlabeled") p.vertical_rule = VerticalRule::kUnlabeled;
        else throw ConfigError(full + ": expected labeled|unlabeled");
      } else if (key == "max_label_length") {
        p.max_label_length = static_cast<int>(to_int(full, v));
      } else {
        throw ConfigError("unknown key: " + full);
      }
    }
    p.validate();
    out[dataset] = p;
  }
  return out;
}

}  // namespace strfew
