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

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "crkd/common/error.hpp"
#include "crkd/data/dataset.hpp"

namespace crkd::data {
namespace fs = std::filesystem;
namespace {

constexpr char kMagic[4] = {'C', 'R', 'K', 'D'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kDtypeU8 = 0;
constexpr std::uint8_t kDtypeF32 = 1;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

bool exactly_8bit(const Tensor& t) {
  for (double v : t.values()) {
    const double k = v * 255.0;
    if (k < 0.0 || k > 255.0 || std::round(k) / 255.0 != v) return false;
  }
  return true;
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// Values that are exact multiples of 1/255 are stored as uint8; anything else
// (e.g. rescaled frames) falls back to float32 so the round trip stays exact
// for float32-representable data.
void write_sample_file(const fs::path& path, const Tensor& frames) {
  const Shape& s = frames.shape();
  const bool as_u8 = exactly_8bit(frames);
  std::string out(kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint8_t>(out, 4);
  for (int d : {s.t, s.c, s.h, s.w}) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put_le<std::uint8_t>(out, as_u8 ? kDtypeU8 : kDtypeF32);
  out.reserve(out.size() + frames.size() * (as_u8 ? 1 : 4));
  for (double v : frames.values()) {
    if (as_u8) {
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    } else {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_le<std::uint32_t>(out, bits);
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorCode::kIo, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) fail(ErrorCode::kIo, "short write to " + path.string());
}

Tensor read_sample_file(const fs::path& path) {
  const std::string bytes = read_all(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 8 || std::memcmp(p, kMagic, 4) != 0)
    fail(ErrorCode::kParse, where + "malformed header (bad magic bytes)");
  const auto version = get_le<std::uint16_t>(p + 4);
  if (version != kVersion)
    fail(ErrorCode::kParse, where + "malformed header (unsupported version " +
                                std::to_string(version) + ")");
  const std::uint8_t rank = p[6];
  if (rank != 4)
    fail(ErrorCode::kParse, where + "dimension mismatch (rank " +
                                std::to_string(rank) + ", expected 4)");
  const std::size_t header = 7 + 4 * rank + 1;
  if (bytes.size() < header)
    fail(ErrorCode::kTruncated, where + "truncated header");
  int dims[4];
  for (int i = 0; i < 4; ++i) dims[i] = static_cast<int>(get_le<std::uint32_t>(p + 7 + 4 * i));
  const std::uint8_t dtype = p[7 + 16];
  if (dtype != kDtypeU8 && dtype != kDtypeF32)
    fail(ErrorCode::kParse, where + "malformed header (dtype tag " +
                                std::to_string(dtype) + ")");
  const Shape shape{dims[0], dims[1], dims[2], dims[3]};
  const std::size_t width = dtype == kDtypeU8 ? 1 : 4;
  const std::size_t payload = bytes.size() - header;
  if (payload != shape.size() * width)
    fail(ErrorCode::kTruncated,
         where + "payload holds " + std::to_string(payload) +
             " bytes but header dims " + shape.str() + " require " +
             std::to_string(shape.size() * width));
  Tensor t(shape);
  const unsigned char* src = p + header;
  double* dst = t.data();
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (dtype == kDtypeU8) {
      dst[i] = src[i] / 255.0;
    } else {
      const auto bits = get_le<std::uint32_t>(src + 4 * i);
      float f;
      std::memcpy(&f, &bits, 4);
      dst[i] = f;
    }
  }
  return t;
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "samples", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream vocab(dir / "vocab.txt");
    if (!vocab) fail(ErrorCode::kIo, "cannot write " + (dir / "vocab.txt").string());
    for (const auto& tok : dataset.vocab.tokens()) vocab << tok << '\n';
  }
  std::ofstream manifest(dir / "manifest.tsv");
  if (!manifest) fail(ErrorCode::kIo, "cannot write " + (dir / "manifest.tsv").string());
  for (const auto& sample : dataset.samples) {
    const std::string rel = "samples/" + sample.id + ".crkd";
    write_sample_file(dir / rel, sample.frames);
    manifest << sample.id << '\t' << rel << '\t';
    for (std::size_t i = 0; i < sample.glosses.size(); ++i)
      manifest << (i ? " " : "") << dataset.vocab.token(sample.glosses[i]);
    manifest << '\n';
  }
  if (!manifest) fail(ErrorCode::kIo, "short write to manifest in " + dir.string());
}

Dataset load_dataset(const fs::path& dir) {
  Dataset dataset;
  {
    std::ifstream vocab(dir / "vocab.txt");
    if (!vocab) fail(ErrorCode::kIo, "cannot open " + (dir / "vocab.txt").string());
    std::vector<std::string> tokens;
    for (std::string line; std::getline(vocab, line);)
      if (!line.empty()) tokens.push_back(line);
    dataset.vocab = GlossVocabulary(std::move(tokens));
  }
  const fs::path manifest_path = dir / "manifest.tsv";
  std::ifstream manifest(manifest_path);
  if (!manifest) fail(ErrorCode::kIo, "cannot open " + manifest_path.string());
  int line_no = 0;
  for (std::string line; std::getline(manifest, line);) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != 3)
      fail(ErrorCode::kParse, manifest_path.string() + ":" + std::to_string(line_no) +
                                  ": expected 3 tab-separated fields");
    VideoSample sample;
    sample.id = fields[0];
    std::istringstream glosses(fields[2]);
    for (std::string tok; glosses >> tok;) sample.glosses.push_back(dataset.vocab.index_of(tok));
    sample.frames = read_sample_file(dir / fields[1]);
    validate_sample(sample, dataset.vocab);
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

}  // namespace crkd::data
