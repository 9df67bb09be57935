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

#include "../oracles/oracles.hpp"
#include "crkd/arch/network.hpp"
#include "crkd/arch/ops.hpp"
#include "crkd/metrics/metrics.hpp"
#include "fixtures.hpp"

using namespace crkd;
using crkd::test::error_of;

TEST_CASE("resolution kernel family") {
  CHECK(arch::resolution_kernel(56) == 1);
  CHECK(arch::resolution_kernel(72) == 3);
  CHECK(arch::resolution_kernel(88) == 5);
  CHECK(arch::resolution_kernel(104) == 7);
  CHECK(arch::resolution_kernel(120) == 9);
  for (int r : {48, 60, 64, 80, 100}) {
    CHECK(error_of([r] { arch::resolution_kernel(r); }) == ErrorCode::kUnsupportedResolution);
  }
  CHECK(arch::resolution_kernel(24, 3) == 1);
  CHECK(arch::resolution_kernel(40, 3) == 3);
}

TEST_CASE("student frame features are 7x7 at every supported resolution") {
  for (int r : {56, 72, 88, 104}) {
    arch::DistillConfig c;
    c.student_resolution = r;
    const auto g = arch::build_student(c, 8);
    const int k = arch::resolution_kernel(r);
    CHECK(g.layer("bottleneck1").kernel == arch::Window{k, k});
    const Shape f = g.frame_feature_shape();
    CHECK(f.h == oracle::student_feature_side(r, k));
    CHECK(f == Shape{8, 2048, 7, 7});
    CHECK(g.output_shape() == Shape{2, 1296, 1, 1});
    CHECK(g.levels() == 4);
  }
}

TEST_CASE("table channel ramp") {
  arch::DistillConfig c;
  const auto g = arch::build_student(c, 4);
  const int expect[] = {64, 64, 128, 128, 256, 256, 256, 256};
  for (int i = 0; i < 8; ++i) CHECK(g.layer("conv" + std::to_string(i + 1)).out_channels == expect[i]);
  CHECK(g.layer("conv1").kernel == arch::Window{1, 3});
  CHECK(g.layer("conv2").kernel == arch::Window{3, 1});
  CHECK(g.layer("conv10").out_channels == 2048);
  CHECK(g.layer("bottleneck1").middle_channels == 128);
  CHECK(g.layer("bottleneck3").middle_channels == 256);
  CHECK(g.layer("resbottleneck3").middle_channels == 256);
  CHECK(g.layer("pool3").output.h == 9);
}

TEST_CASE("ctc level count selects the deepest auxiliary heads") {
  arch::DistillConfig c;
  c.ctc_levels = 2;
  const auto g = arch::build_student(c, 8);
  REQUIRE(g.aux_heads.size() == 1);
  CHECK(g.aux_heads[0].id == "aux_resbottleneck2");
  c.ctc_levels = 1;
  CHECK(arch::build_student(c, 8).aux_heads.empty());
}

TEST_CASE("method 1 keeps the teacher's downsampling count and upsamples") {
  arch::DistillConfig c;
  c.method = arch::Method::kMethod1;
  CHECK(arch::teacher_downsampling_count(224, 7) == 5);
  for (int r : {56, 72, 88, 104}) {
    c.student_resolution = r;
    const auto g = arch::build_method1_student(c, 8);
    int pools = 0;
    for (const auto& l : g.layers) pools += l.kind == arch::LayerKind::kMaxPool2d;
    CHECK(pools == 5);
    CHECK(g.frame_feature_shape() == Shape{8, 2048, 7, 7});
    CHECK(g.layers[g.frame_feature_layer].kind == arch::LayerKind::kUpsampleBilinear);
  }
}

TEST_CASE("reference teacher produces matching frame features") {
  arch::DistillConfig c;
  const auto g = arch::build_teacher(c, 8);
  CHECK(g.frame_feature_shape() == Shape{8, 2048, 7, 7});
  CHECK(g.output_shape() == Shape{2, 1296, 1, 1});
}

TEST_CASE("shape propagation rejects a mismatched layer") {
  arch::DistillConfig c;
  auto g = arch::build_student(c, 8);
  g.layers[3].in_channels += 1;
  CHECK(error_of([&] { arch::propagate_shapes(g); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("distill config validation") {
  arch::DistillConfig c;
  c.ctc_levels = 5;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kConfiguration);
  c = {};
  c.gradient_stop_probability = 1.5;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kConfiguration);
  c = {};
  c.student_resolution = 60;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kUnsupportedResolution);
  CHECK(arch::parse_method("orig") == arch::Method::kOriginal);
  CHECK(error_of([] { arch::parse_method("3"); }) == ErrorCode::kConfiguration);
}

TEST_CASE("temporal shift matches the index oracle on one-hot inputs") {
  const int T = 5, C = 16, H = 2, W = 3;
  for (auto [f, b] : {std::pair{0.125, 0.125}, std::pair{0.25, 0.0}, std::pair{0.2, 0.3}}) {
    for (int t0 = 0; t0 < T; ++t0) {
      for (int c0 = 0; c0 < C; ++c0) {
        Tensor x(Shape{T, C, H, W});
        x.at(t0, c0, 1, 2) = 1.0;
        const Tensor y = arch::ops::temporal_shift(x, f, b);
        for (int t = 0; t < T; ++t) {
          for (int c = 0; c < C; ++c) {
            const int src = oracle::shift_source_frame(t, c, C, T, f, b);
            const double want = (src == t0 && c == c0) ? 1.0 : 0.0;
            REQUIRE(y.at(t, c, 1, 2) == want);
            REQUIRE(y.at(t, c, 0, 0) == 0.0);
          }
        }
      }
    }
  }
}

TEST_CASE("temporal shift backward is its adjoint") {
  Rng rng(3);
  Tensor x(Shape{6, 12, 2, 2}), g(Shape{6, 12, 2, 2});
  for (double& v : x.values()) v = rng.uniform(-1, 1);
  for (double& v : g.values()) v = rng.uniform(-1, 1);
  const Tensor y = arch::ops::temporal_shift(x, 0.25, 0.125);
  const Tensor gx = arch::ops::temporal_shift(g, 0.25, 0.125, true);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y.values()[i] * g.values()[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x.values()[i] * gx.values()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("convolution matches a direct loop") {
  Rng rng(7);
  const arch::ops::ConvGeometry g{3, 4, {3, 2}, {2, 1}, {1, 0}};
  Tensor x(Shape{2, 3, 7, 6});
  for (double& v : x.values()) v = rng.uniform(-1, 1);
  std::vector<double> w(4 * 3 * 3 * 2), b(4);
  for (double& v : w) v = rng.uniform(-1, 1);
  for (double& v : b) v = rng.uniform(-1, 1);
  const Tensor y = arch::ops::conv2d_forward(x, w.data(), b.data(), g);
  const Shape os = g.output_shape(x.shape());
  REQUIRE(y.shape() == os);
  for (int t = 0; t < 2; ++t)
    for (int o = 0; o < 4; ++o)
      for (int i = 0; i < os.h; ++i)
        for (int j = 0; j < os.w; ++j) {
          double s = b[o];
          for (int c = 0; c < 3; ++c)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 2; ++kx) {
                const int yy = i * 2 - 1 + ky, xx = j + kx;
                if (yy < 0 || yy >= 7 || xx < 0 || xx >= 6) continue;
                s += w[((o * 3 + c) * 3 + ky) * 2 + kx] * x.at(t, c, yy, xx);
              }
          REQUIRE(y.at(t, o, i, j) == doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("convolution backward matches finite differences") {
  Rng rng(9);
  const arch::ops::ConvGeometry g{2, 3, {3, 3}, {1, 1}, {1, 1}};
  Tensor x(Shape{2, 2, 4, 4});
  for (double& v : x.values()) v = rng.uniform(-1, 1);
  std::vector<double> w(3 * 2 * 9), b(3, 0.1);
  for (double& v : w) v = rng.uniform(-1, 1);
  Tensor probe(g.output_shape(x.shape()));
  for (double& v : probe.values()) v = rng.uniform(-1, 1);
  auto loss = [&] {
    const Tensor y = arch::ops::conv2d_forward(x, w.data(), b.data(), g);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * probe.values()[i];
    return s;
  };
  Tensor dx;
  std::vector<double> dw(w.size(), 0.0), db(3, 0.0);
  arch::ops::conv2d_backward(x, w.data(), g, probe, &dx, dw.data(), db.data());
  for (std::size_t i = 0; i < w.size(); i += 5)
    CHECK(oracle::relative_error(dw[i], oracle::central_difference(w, i, 1e-6, loss)) < 1e-7);
  std::vector<double> xv(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < xv.size(); i += 7) {
    const double numeric = oracle::central_difference(xv, i, 1e-6, [&] {
      std::copy(xv.begin(), xv.end(), x.values().begin());
      return loss();
    });
    std::copy(xv.begin(), xv.end(), x.values().begin());
    CHECK(oracle::relative_error(dx.values()[i], numeric) < 1e-7);
  }
}

TEST_CASE("network parameter count agrees with the analytic profile") {
  const auto cfg = test::tiny_config();
  const auto g = arch::build_student(cfg, 4);
  arch::Network net(g, 1);
  CHECK(net.learnable_count() == metrics::count_params(g, true));
  arch::DistillConfig m1 = cfg;
  m1.method = arch::Method::kMethod1;
  m1.teacher_resolution = 16;
  const auto g1 = arch::build_method1_student(m1, 4);
  CHECK(arch::Network(g1, 1).learnable_count() == metrics::count_params(g1, true));
}

TEST_CASE("network forward shapes and probability rows") {
  const auto cfg = test::tiny_config();
  arch::Network net(arch::build_student(cfg, 8), 2);
  Tensor video(Shape{8, 3, 16, 16});
  Rng rng(1);
  for (double& v : video.values()) v = rng.uniform();
  const auto r = net.forward(video, arch::Mode::kEval);
  CHECK(r.frame_features.shape() == Shape{8, 8, 2, 2});
  REQUIRE(r.level_log_probs.size() == 4);
  CHECK(r.level_log_probs[0].rows() == 8);
  CHECK(r.level_log_probs[1].rows() == 8);
  CHECK(r.level_log_probs[2].rows() == 4);
  CHECK(r.main_log_probs().rows() == 2);
  for (const auto& p : r.level_probs())
    for (Eigen::Index t = 0; t < p.rows(); ++t) CHECK(p.row(t).sum() == doctest::Approx(1.0));
  CHECK(error_of([&] { net.forward(Tensor(Shape{8, 3, 20, 20}), arch::Mode::kEval); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(error_of([&] { net.forward(Tensor(Shape{3, 3, 16, 16}), arch::Mode::kEval); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("eval forward is repeatable and leaves weights untouched") {
  const auto cfg = test::tiny_config();
  arch::Network net(arch::build_student(cfg, 4), 3);
  Tensor video(Shape{4, 3, 16, 16}, 0.3);
  const auto h = net.weights_hash();
  const auto a = net.forward(video, arch::Mode::kEval);
  const auto b = net.forward(video, arch::Mode::kEval);
  CHECK(a.main_log_probs() == b.main_log_probs());
  CHECK(net.weights_hash() == h);
}

TEST_CASE("frozen networks refuse gradient writes") {
  const auto cfg = test::tiny_config();
  arch::Network net(arch::build_student(cfg, 4), 3);
  Tensor video(Shape{4, 3, 16, 16}, 0.3);
  const auto r = net.forward(video, arch::Mode::kTrain);
  net.freeze();
  arch::BackwardSeed seed;
  seed.frame_features = Tensor(r.frame_features.shape(), 1.0);
  CHECK(error_of([&] { net.backward(seed); }) == ErrorCode::kFrozenParameter);
}

TEST_CASE("weights files round trip and detect damage") {
  const auto dir = std::filesystem::temp_directory_path() / "crkd_unit_weights";
  std::filesystem::create_directories(dir);
  const auto cfg = test::tiny_config();
  arch::Network a(arch::build_student(cfg, 4), 4);
  arch::Network b(arch::build_student(cfg, 4), 5);
  REQUIRE(a.weights_hash() != b.weights_hash());
  const auto path = dir / "w.crkw";
  arch::save_weights(a, path);
  arch::load_weights(b, path);
  CHECK(a.weights_hash() == b.weights_hash());
  const auto arrays = arch::read_weights_file(path);
  CHECK(arrays.size() == a.parameters().size());

  arch::Network other(arch::build_teacher(cfg, 4), 1);
  CHECK(error_of([&] { arch::load_weights(other, path); }) == ErrorCode::kConfiguration);

  const auto size = std::filesystem::file_size(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(size / 2));
    char c;
    f.read(&c, 1);
    c ^= 0x5a;
    f.seekp(static_cast<std::streamoff>(size / 2));
    f.write(&c, 1);
  }
  CHECK(error_of([&] { arch::read_weights_file(path); }) == ErrorCode::kParse);
  std::filesystem::resize_file(path, size / 3);
  const ErrorCode code = error_of([&] { arch::read_weights_file(path); });
  CHECK((code == ErrorCode::kTruncated || code == ErrorCode::kParse));
  std::filesystem::remove_all(dir);
}
