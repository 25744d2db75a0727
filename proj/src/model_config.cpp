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

#include "strfew/model/config.hpp"

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace strfew {

namespace nn {

std::string to_string(BackboneKind k) {
  switch (k) {
    case BackboneKind::kMini: return "mini";
    case BackboneKind::kVgg7: return "vgg7";
    case BackboneKind::kResnet29: return "resnet29";
  }
  return "?";
}

BackboneKind parse_backbone(const std::string& name) {
  if (name == "mini") return BackboneKind::kMini;
  if (name == "vgg7" || name == "vgg") return BackboneKind::kVgg7;
  if (name == "resnet29" || name == "resnet") return BackboneKind::kResnet29;
  throw std::invalid_argument("unknown feature extractor: " + name);
}

}  // namespace nn

std::string to_string(Transform t) { return t == Transform::kTps ? "tps" : "none"; }
std::string to_string(SequenceKind s) { return s == SequenceKind::kBiLstm ? "bilstm" : "none"; }
std::string to_string(Predictor p) { return p == Predictor::kAttention ? "attention" : "ctc"; }

namespace {

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("model." + key + ": expected an integer, got '" + v + "'");
  }
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, item));
  return out;
}

}  // namespace

ModelConfig ModelConfig::crnn() { return ModelConfig{}; }

ModelConfig ModelConfig::trba() {
  ModelConfig c;
  c.transform = Transform::kTps;
  c.features = nn::BackboneKind::kResnet29;
  c.predictor = Predictor::kAttention;
  return c;
}

ModelConfig ModelConfig::mini_crnn() {
  ModelConfig c;
  c.features = nn::BackboneKind::kMini;
  c.hidden = 64;
  c.rotation_hidden = 64;
  c.embedding_dim = 64;
  return c;
}

ModelConfig ModelConfig::mini_trba() {
  ModelConfig c = mini_crnn();
  c.transform = Transform::kTps;
  c.predictor = Predictor::kAttention;
  c.attention_hidden = 64;
  c.tps.loc_channels = {8, 16, 32, 32};
  c.tps.loc_hidden = 32;
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "crnn") return crnn();
  if (name == "trba") return trba();
  if (name == "mini_crnn" || name == "mini") return mini_crnn();
  if (name == "mini_trba") return mini_trba();
  throw std::invalid_argument("unknown model preset: " + name);
}

int ModelConfig::num_classes() const {
  const Charset cs = make_charset();
  return predictor == Predictor::kCtc ? CtcClasses::count(cs) : AttentionClasses::count(cs);
}

int ModelConfig::feature_dim() const { return features == nn::BackboneKind::kMini ? 64 : 512; }

int ModelConfig::context_dim() const { return sequence == SequenceKind::kBiLstm ? hidden : feature_dim(); }

Charset ModelConfig::make_charset() const { return Charset(charset, {"[PAD]", "[UNK]", " "}); }

void ModelConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, v] : kv) {
    if (key == "preset") {
      continue;
    } else if (key == "transform") {
      if (v == "tps") transform = Transform::kTps;
      else if (v == "none") transform = Transform::kNone;
      else throw std::invalid_argument("model.transform: expected none|tps, got '" + v + "'");
    } else if (key == "features") {
      features = nn::parse_backbone(v);
    } else if (key == "sequence") {
      if (v == "bilstm") sequence = SequenceKind::kBiLstm;
      else if (v == "none") sequence = SequenceKind::kNone;
      else throw std::invalid_argument("model.sequence: expected none|bilstm, got '" + v + "'");
    } else if (key == "predictor") {
      if (v == "ctc") predictor = Predictor::kCtc;
      else if (v == "attention") predictor = Predictor::kAttention;
      else throw std::invalid_argument("model.predictor: expected ctc|attention, got '" + v + "'");
    } else if (key == "sequence_layers") {
      sequence_layers = parse_int(key, v);
    } else if (key == "hidden") {
      hidden = parse_int(key, v);
    } else if (key == "attention_hidden") {
      attention_hidden = parse_int(key, v);
    } else if (key == "fiducials") {
      tps.fiducials = parse_int(key, v);
    } else if (key == "tps_channels") {
      tps.loc_channels = parse_ints(key, v);
    } else if (key == "tps_hidden") {
      tps.loc_hidden = parse_int(key, v);
    } else if (key == "rotation_hidden") {
      rotation_hidden = parse_int(key, v);
    } else if (key == "embedding_dim") {
      embedding_dim = parse_int(key, v);
    } else if (key == "charset") {
      charset = v;
    } else {
      throw std::invalid_argument("unknown model key: " + key);
    }
  }
  validate();
}

void ModelConfig::validate() const {
  auto positive = [](const char* name, int v) {
    if (v <= 0) throw std::invalid_argument(std::string("model.") + name + " must be positive");
  };
  positive("sequence_layers", sequence_layers);
  positive("hidden", hidden);
  positive("attention_hidden", attention_hidden);
  positive("rotation_hidden", rotation_hidden);
  positive("embedding_dim", embedding_dim);
  positive("tps_hidden", tps.loc_hidden);
  if (tps.fiducials < 6 || tps.fiducials % 2) throw std::invalid_argument("model.fiducials must be even and >= 6");
  if (tps.loc_channels.empty()) throw std::invalid_argument("model.tps_channels must be nonempty");
  if (charset.empty()) throw std::invalid_argument("model.charset must be nonempty");
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "transform=" << to_string(transform) << "\n"
     << "features=" << nn::to_string(features) << "\n"
     << "sequence=" << to_string(sequence) << "\n"
     << "predictor=" << to_string(predictor) << "\n"
     << "sequence_layers=" << sequence_layers << "\n"
     << "hidden=" << hidden << "\n"
     << "attention_hidden=" << attention_hidden << "\n"
     << "fiducials=" << tps.fiducials << "\n"
     << "tps_channels=" << join_ints(tps.loc_channels) << "\n"
     << "tps_hidden=" << tps.loc_hidden << "\n"
     << "rotation_hidden=" << rotation_hidden << "\n"
     << "embedding_dim=" << embedding_dim << "\n"
     << "charset=" << charset << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed model config line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ModelConfig c;
  c.apply(kv);
  return c;
}

std::string ModelConfig::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : to_text()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace strfew
