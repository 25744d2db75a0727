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

#include "strfew/corpus/pack.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "strfew/corpus/image_io.hpp"

namespace strfew {
namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'S', 'T', 'R', 'F', 'I', 'D', 'X', '\0'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}
  std::uint8_t u8() { need(1); return buf_[pos_++]; }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw PackError("truncated pack index");
  }
  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

struct PackedDataset::Payload {
  int fd = -1;
  ~Payload() {
    if (fd >= 0) ::close(fd);
  }
};

void write_packed(const std::vector<PackItem>& items, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path index = dir / kPackIndexName;
  std::error_code ec;
  fs::remove(index, ec);

  std::set<std::string> ids;
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kPackFormatVersion);
  w.u64(items.size());
  {
    std::ofstream payload(dir / kPackPayloadName, std::ios::binary | std::ios::trunc);
    if (!payload) throw PackError("cannot write payload in " + dir.string());
    std::uint64_t offset = 0;
    for (const auto& item : items) {
      const auto& r = item.record;
      const auto& img = item.image;
      if (!ids.insert(r.id).second) throw PackError("duplicate sample id " + r.id);
      if (img.empty()) throw PackError("empty image for sample " + r.id);
      payload.write(reinterpret_cast<const char*>(img.pixels.data()),
                    static_cast<std::streamsize>(img.pixels.size()));
      w.u64(offset);
      w.u64(img.pixels.size());
      w.u32(static_cast<std::uint32_t>(img.width));
      w.u32(static_cast<std::uint32_t>(img.height));
      w.u8(static_cast<std::uint8_t>(img.channels));
      w.u8(static_cast<std::uint8_t>((r.label ? 1 : 0) | (r.confidence ? 2 : 0)));
      w.f64(r.confidence.value_or(0.0));
      w.str(r.id);
      w.str(r.dataset);
      w.str(r.split);
      w.str(r.label.value_or(""));
      w.str(r.source);
      w.str(r.scene);
      offset += img.pixels.size();
    }
    payload.flush();
    if (!payload) throw PackError("failed writing payload in " + dir.string());
  }
  const auto checksum = fnv1a(w.bytes().data(), w.bytes().size());
  w.u64(checksum);

  const fs::path tmp = dir / "index.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              static_cast<std::streamsize>(w.bytes().size()));
    out.flush();
    if (!out) throw PackError("failed writing index in " + dir.string());
  }
  fs::rename(tmp, index);
}

PackedDataset PackedDataset::open(const fs::path& dir) {
  const fs::path index = dir / kPackIndexName;
  if (!fs::exists(index)) throw PackError("index not found: " + index.string());
  std::ifstream in(index, std::ios::binary);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 4 + 8 + 8 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw PackError("not a pack index: " + index.string());
  }
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(buf[buf.size() - 8 + i]) << (8 * i);
  if (fnv1a(buf.data(), buf.size() - 8) != stored) throw PackError("pack index checksum mismatch");

  PackedDataset ds;
  ds.dir_ = dir;
  Reader r(buf);
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8();
  const auto version = r.u32();
  if (version != kPackFormatVersion) {
    throw PackError("unsupported pack version " + std::to_string(version));
  }
  const auto n = r.u64();
  ds.records_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    PackedRecord rec;
    rec.offset = r.u64();
    rec.length = r.u64();
    rec.width = static_cast<int>(r.u32());
    rec.height = static_cast<int>(r.u32());
    rec.channels = r.u8();
    const auto flags = r.u8();
    const double conf = r.f64();
    rec.id = r.str();
    rec.dataset = r.str();
    rec.split = r.str();
    auto label = r.str();
    if (flags & 1) rec.label = std::move(label);
    if (flags & 2) rec.confidence = conf;
    rec.source = r.str();
    rec.scene = r.str();
    ds.by_id_.emplace(rec.id, ds.records_.size());
    ds.records_.push_back(std::move(rec));
  }
  auto payload = std::make_shared<Payload>();
  payload->fd = ::open((dir / kPackPayloadName).c_str(), O_RDONLY);
  if (payload->fd < 0) throw PackError("payload not found in " + dir.string());
  ds.payload_ = std::move(payload);
  return ds;
}

std::optional<std::size_t> PackedDataset::find(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Raster PackedDataset::image(std::size_t index) const {
  const auto& rec = records_.at(index);
  Raster img(rec.width, rec.height, rec.channels);
  if (img.pixels.size() != rec.length) throw PackError("size mismatch for sample " + rec.id);
  std::size_t done = 0;
  while (done < rec.length) {
    const auto got = ::pread(payload_->fd, img.pixels.data() + done, rec.length - done,
                             static_cast<off_t>(rec.offset + done));
    if (got <= 0) throw PackError("short payload read for sample " + rec.id);
    done += static_cast<std::size_t>(got);
  }
  return img;
}

Raster PackedDataset::image(const std::string& id) const {
  auto i = find(id);
  if (!i) throw PackError("unknown sample id " + id);
  return image(*i);
}

std::map<std::pair<std::string, std::string>, std::size_t> PackedDataset::counts() const {
  std::map<std::pair<std::string, std::string>, std::size_t> out;
  for (const auto& r : records_) ++out[{r.dataset, r.split}];
  return out;
}

std::vector<std::string> PackedDataset::datasets() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records_) {
    if (seen.insert(r.dataset).second) out.push_back(r.dataset);
  }
  return out;
}

std::vector<LabeledSample> PackedDataset::labeled(const std::optional<std::string>& split,
                                                  const std::optional<std::string>& dataset) const {
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!r.label || (split && r.split != *split) || (dataset && r.dataset != *dataset)) continue;
    out.push_back({image(i), *r.label, r.dataset, r.id, r.scene});
  }
  return out;
}

std::vector<UnlabeledSample> PackedDataset::unlabeled(const std::optional<std::string>& split,
                                                      const std::optional<std::string>& dataset) const {
  std::vector<UnlabeledSample> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if ((split && r.split != *split) || (dataset && r.dataset != *dataset)) continue;
    out.push_back({image(i), r.dataset, r.id, r.scene});
  }
  return out;
}

PackedDataset pack_dataset(const DatasetManifest& manifest, const fs::path& out,
                           const fs::path& image_root) {
  std::vector<PackItem> items;
  items.reserve(manifest.entries.size());
  std::vector<std::string> failed;
  for (const auto& e : manifest.entries) {
    fs::path p = e.image;
    if (p.is_relative() && !image_root.empty()) p = image_root / p;
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
    r.split = e.split.value_or("train");
    r.label = e.label;
    r.source = e.image;
    r.scene = e.scene;
    r.confidence = e.confidence;
    items.push_back(std::move(item));
  }
  if (!failed.empty()) {
    std::string msg = "failed to decode " + std::to_string(failed.size()) + " image(s):";
    for (const auto& id : failed) msg += " " + id;
    throw PackError(msg);
  }
  write_packed(items, out);
  return PackedDataset::open(out);
}

}  // namespace strfew
