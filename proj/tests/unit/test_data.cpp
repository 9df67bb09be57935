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

#include <filesystem>
#include <fstream>

#include "crkd/common/resize.hpp"
#include "fixtures.hpp"

using namespace crkd;
using crkd::test::error_of;

TEST_CASE("generator honours the sample contract") {
  const data::Dataset d = data::generate_synthetic_dataset(12, 10, 8, 72, 7);
  REQUIRE(d.samples.size() == 10);
  CHECK(d.vocab.size() == 12);
  for (const auto& s : d.samples) {
    const int L = static_cast<int>(s.glosses.size());
    CHECK(L >= 3);
    CHECK(L <= 8);
    CHECK(s.length() == 8 * L);
    CHECK(s.length() >= 24);
    CHECK(s.length() <= 64);
    CHECK(s.frames.shape().c == 3);
    CHECK(s.resolution() == 72);
    for (double v : s.frames.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    data::validate_sample(s, d.vocab);
  }
}

TEST_CASE("generator is deterministic per seed") {
  const auto a = data::generate_synthetic_dataset(12, 4, 6, 56, 3);
  const auto b = data::generate_synthetic_dataset(12, 4, 6, 56, 3);
  const auto c = data::generate_synthetic_dataset(12, 4, 6, 56, 4);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].frames == b.samples[i].frames);
    CHECK(a.samples[i].glosses == b.samples[i].glosses);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    differs = differs || !(a.samples[i].frames == c.samples[i].frames);
  CHECK(differs);
}

TEST_CASE("generator rejects degenerate arguments") {
  CHECK(error_of([] { data::generate_synthetic_dataset(1, 4, 6, 56, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { data::generate_synthetic_dataset(12, 0, 6, 56, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { data::generate_synthetic_dataset(12, 4, 0, 56, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { data::generate_synthetic_dataset(12, 4, 6, 48, 1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("vocabulary keeps the blank at index 0") {
  const auto v = data::GlossVocabulary::synthetic(5);
  CHECK(v.size() == 5);
  CHECK(v.index_of(v.token(1)) == 1);
  CHECK(v.index_of(v.token(4)) == 4);
  CHECK(error_of([] { data::GlossVocabulary({"A", "A"}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { data::GlossVocabulary({"A B"}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("sample validation") {
  auto d = data::generate_synthetic_dataset(4, 1, 4, 56, 2);
  data::VideoSample s = d.samples[0];
  s.glosses.push_back(0);
  CHECK(error_of([&] { data::validate_sample(s, d.vocab); }) == ErrorCode::kInvalidArgument);
  s = d.samples[0];
  s.glosses.push_back(9);
  CHECK(error_of([&] { data::validate_sample(s, d.vocab); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("identity policy leaves the clip unchanged") {
  const auto d = data::generate_synthetic_dataset(6, 2, 5, 64, 9);
  data::AugmentPolicy p;
  p.crop_source = 64;
  p.crop_target = 64;
  p.flip_probability = 0.0;
  p.temporal_scale_bound = 0.0;
  Rng rng(1);
  for (const auto& s : d.samples) {
    const auto out = data::augment_sequence(s, p, rng);
    CHECK(out.frames == s.frames);
    CHECK(out.glosses == s.glosses);
  }
}

TEST_CASE("temporal resampling stays within the bound") {
  data::VideoSample s;
  s.id = "x";
  s.frames = Tensor(Shape{100, 3, 8, 8});
  for (int t = 0; t < 100; ++t)
    for (int i = 0; i < 192; ++i) s.frames.frame(t)[i] = t / 100.0;
  s.glosses = {1};
  data::AugmentPolicy p;
  p.crop_source = 8;
  p.crop_target = 8;
  p.temporal_scale_bound = 0.2;
  Rng rng(4);
  int lo = 1000, hi = 0;
  for (int i = 0; i < 300; ++i) {
    data::AugmentRecord rec;
    const auto out = data::augment_sequence(s, p, rng, &rec);
    CHECK(out.length() >= 80);
    CHECK(out.length() <= 120);
    lo = std::min(lo, out.length());
    hi = std::max(hi, out.length());
    REQUIRE(rec.frame_map.size() == static_cast<std::size_t>(out.length()));
    for (std::size_t k = 1; k < rec.frame_map.size(); ++k) CHECK(rec.frame_map[k] >= rec.frame_map[k - 1]);
    CHECK(out.glosses == s.glosses);
  }
  CHECK(lo < 90);
  CHECK(hi > 110);
  CHECK(data::temporal_length_bounds(100, 0.2) == std::pair<int, int>{80, 120});
}

TEST_CASE("one crop window and flip decision per sequence") {
  const auto d = data::generate_synthetic_dataset(6, 1, 5, 64, 3);
  const auto& s = d.samples[0];
  data::AugmentPolicy p;
  p.crop_source = 64;
  p.crop_target = 40;
  p.temporal_scale_bound = 0.0;
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    data::AugmentRecord rec;
    const auto out = data::augment_sequence(s, p, rng, &rec);
    REQUIRE(out.resolution() == 40);
    for (int t = 0; t < out.length(); ++t) {
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 40; ++y) {
          for (int x = 0; x < 40; ++x) {
            const int sx = rec.flipped ? rec.crop_x + 39 - x : rec.crop_x + x;
            REQUIRE(out.frames.at(t, c, y, x) == s.frames.at(rec.frame_map[t], c, rec.crop_y + y, sx));
          }
        }
      }
    }
  }
}

TEST_CASE("centered policy crops the middle without flipping") {
  const auto d = data::generate_synthetic_dataset(6, 1, 5, 64, 3);
  data::AugmentPolicy p;
  p.crop_source = 64;
  p.crop_target = 48;
  Rng rng(1);
  data::AugmentRecord rec;
  data::augment_sequence(d.samples[0], p.centered(), rng, &rec);
  CHECK(rec.crop_y == 8);
  CHECK(rec.crop_x == 8);
  CHECK_FALSE(rec.flipped);
  CHECK(rec.output_length == rec.source_length);
}

TEST_CASE("crop larger than the frame is rejected") {
  const auto d = data::generate_synthetic_dataset(6, 1, 5, 56, 3);
  data::AugmentPolicy p;
  p.crop_source = 72;
  p.crop_target = 64;
  Rng rng(1);
  CHECK(error_of([&] { data::augment_sequence(d.samples[0], p, rng); }) == ErrorCode::kInvalidArgument);
  data::AugmentPolicy bad;
  bad.crop_source = 32;
  bad.crop_target = 64;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("rescale keeps length and labels") {
  data::VideoSample s;
  s.frames = Tensor(Shape{3, 3, 224, 224}, 0.25);
  s.glosses = {1, 2};
  const auto out = data::rescale_resolution(s, 72);
  CHECK(out.frames.shape() == Shape{3, 3, 72, 72});
  CHECK(out.glosses == s.glosses);
  for (double v : out.frames.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("bilinear resize is exact at equal size and its backward is the adjoint") {
  Rng rng(5);
  Tensor x(Shape{2, 2, 9, 7});
  for (double& v : x.values()) v = rng.uniform();
  CHECK(resize_bilinear(x, 9, 7) == x);
  const Tensor y = resize_bilinear(x, 5, 12);
  Tensor g(y.shape());
  for (double& v : g.values()) v = rng.uniform(-1, 1);
  const Tensor gx = resize_bilinear_backward(g, 9, 7);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y.values()[i] * g.values()[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x.values()[i] * gx.values()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("dataset directory round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "crkd_unit_dataset";
  std::filesystem::remove_all(dir);
  const auto d = data::generate_synthetic_dataset(5, 3, 4, 56, 12);
  data::save_dataset(d, dir);
  const auto back = data::load_dataset(dir);
  CHECK(back.vocab == d.vocab);
  REQUIRE(back.samples.size() == d.samples.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    CHECK(back.samples[i].id == d.samples[i].id);
    CHECK(back.samples[i].glosses == d.samples[i].glosses);
    CHECK(back.samples[i].frames == d.samples[i].frames);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("sample files: float payloads round trip, damage is reported") {
  const auto dir = std::filesystem::temp_directory_path() / "crkd_unit_sample";
  std::filesystem::create_directories(dir);
  Tensor t(Shape{2, 3, 4, 5});
  Rng rng(2);
  for (double& v : t.values()) v = static_cast<float>(rng.uniform());
  const auto path = dir / "a.crkd";
  data::write_sample_file(path, t);
  CHECK(data::read_sample_file(path) == t);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  CHECK(error_of([&] { data::read_sample_file(path); }) == ErrorCode::kTruncated);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK(error_of([&] { data::read_sample_file(path); }) == ErrorCode::kParse);
  std::filesystem::remove_all(dir);
}
