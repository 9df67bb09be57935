// Copyright 2026 The crkd Authors
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

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "crkd/arch/network.hpp"
#include "crkd/common/error.hpp"

namespace crkd::arch {
namespace fs = std::filesystem;
namespace {

constexpr char kMagic[4] = {'C', 'R', 'K', 'W'};
constexpr std::uint16_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bytes_.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
  void put_string(const std::string& s) {
    put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    bytes_ += s;
  }
  void put_raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end, std::string where)
      : bytes_(bytes), end_(end), where_(std::move(where)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string get_string() {
    const auto n = get<std::uint16_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) fail(ErrorCode::kTruncated, where_ + "truncated manifest");
  }

  const std::string& bytes_;
  std::size_t end_;
  std::string where_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_weights_file(const fs::path& path, const std::vector<NamedArray>& arrays) {
  Writer w;
  w.put_raw(kMagic, 4);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(arrays.size()));
  std::uint64_t offset = 0;
  for (const auto& a : arrays) {
    w.put_string(a.layer_id);
    w.put_string(a.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(a.dims.size()));
    for (int d : a.dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put<std::uint64_t>(offset);
    offset += a.values.size();
  }
  for (const auto& a : arrays) {
    for (double v : a.values) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      w.put<std::uint32_t>(bits);
    }
  }
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(w.bytes().data()),
                          static_cast<uInt>(w.bytes().size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(crc));

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

std::vector<NamedArray> read_weights_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  const std::string where = path.string() + ": ";
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorCode::kParse, where + "malformed header (bad magic bytes)");
  if (bytes.size() < 14) fail(ErrorCode::kTruncated, where + "truncated header");

  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[body + i])) << (8 * i);
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()),
                          static_cast<uInt>(body));
  if (static_cast<std::uint32_t>(crc) != stored)
    fail(ErrorCode::kParse, where + "checksum mismatch");

  Reader r(bytes, body, where);
  r.get<std::uint32_t>();  // magic
  if (r.get<std::uint16_t>() != kVersion) fail(ErrorCode::kParse, where + "unsupported version");
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedArray> arrays(count);
  std::vector<std::uint64_t> offsets(count);
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray& a = arrays[i];
    a.layer_id = r.get_string();
    a.name = r.get_string();
    const auto rank = r.get<std::uint8_t>();
    std::uint64_t n = 1;
    for (int d = 0; d < rank; ++d) {
      a.dims.push_back(static_cast<int>(r.get<std::uint32_t>()));
      n *= static_cast<std::uint64_t>(a.dims.back());
    }
    offsets[i] = r.get<std::uint64_t>();
    if (offsets[i] != total) fail(ErrorCode::kParse, where + "non-contiguous offsets");
    a.values.resize(n);
    total += n;
  }
  const std::size_t payload_start = r.position();
  if (body - payload_start != total * 4)
    fail(ErrorCode::kTruncated, where + "payload length does not match manifest dims");
  for (std::uint32_t i = 0; i < count; ++i) {
    const char* p = bytes.data() + payload_start + offsets[i] * 4;
    for (std::size_t k = 0; k < arrays[i].values.size(); ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[4 * k + b])) << (8 * b);
      float f;
      std::memcpy(&f, &bits, 4);
      arrays[i].values[k] = f;
    }
  }
  return arrays;
}

std::vector<NamedArray> export_weights(const Network& network) {
  std::vector<NamedArray> out;
  for (const Parameter* p : network.parameters())
    out.push_back({p->layer_id, p->name, p->dims, p->value});
  return out;
}

void import_weights(Network& network, const std::vector<NamedArray>& arrays) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.layer_id + "." + a.name] = &a;
  for (Parameter* p : network.parameters()) {
    auto it = by_name.find(p->full_name());
    if (it == by_name.end())
      fail(ErrorCode::kConfiguration, "weights lack parameter '" + p->full_name() + "'");
    if (it->second->dims != p->dims)
      fail(ErrorCode::kConfiguration, "parameter '" + p->full_name() + "' has mismatched dims");
    p->value = it->second->values;
  }
}

void save_weights(const Network& network, const fs::path& path) {
  write_weights_file(path, export_weights(network));
}

void load_weights(Network& network, const fs::path& path) {
  import_weights(network, read_weights_file(path));
}

}  // namespace crkd::arch
