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

#include <random>
#include <sstream>

#include "../oracles/oracles.hpp"
#include "crkd/metrics/metrics.hpp"
#include "fixtures.hpp"
#include "json.hpp"

using namespace crkd;
using crkd::test::error_of;

TEST_CASE("wer examples") {
  using V = std::vector<int>;
  const V abc{1, 2, 3};
  CHECK(metrics::wer(abc, abc).wer == 0.0);
  const auto sub = metrics::wer(abc, V{1, 9, 3});
  CHECK(sub.substitutions == 1);
  CHECK(sub.errors() == 1);
  CHECK(sub.wer == doctest::Approx(100.0 / 3.0));
  const auto del = metrics::wer(abc, V{});
  CHECK(del.deletions == 3);
  CHECK(del.wer == 100.0);
  const auto ins = metrics::wer(V{1}, V{1, 2, 2});
  CHECK(ins.insertions == 2);
  CHECK(ins.wer == 200.0);
  // Two substitutions tie with one deletion plus one insertion; substitution wins.
  const auto swap = metrics::wer(V{1, 2}, V{2, 1});
  CHECK(swap.substitutions == 2);
  CHECK(swap.insertions + swap.deletions == 0);
  CHECK(error_of([] { metrics::wer(std::vector<int>{}, std::vector<int>{1}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("wer counts agree with both edit distance oracles") {
  std::mt19937_64 gen(14);
  std::uniform_int_distribution<int> ref_len(1, 8), hyp_len(0, 8), sym(1, 5);
  for (int i = 0; i < 1000; ++i) {
    std::vector<int> a(ref_len(gen)), b(hyp_len(gen));
    for (int& s : a) s = sym(gen);
    for (int& s : b) s = sym(gen);
    const auto r = metrics::wer(a, b);
    CHECK(r.errors() == oracle::levenshtein_rows(a, b));
    if (a.size() <= 5 && b.size() <= 5) CHECK(r.errors() == oracle::RecursiveLevenshtein(a, b).distance());
    CHECK(r.ref_length == static_cast<int>(a.size()));
    CHECK(r.wer == doctest::Approx(100.0 * r.errors() / a.size()));
  }
}

TEST_CASE("corpus wer is a ratio of summed counts") {
  metrics::WerAccumulator acc;
  acc.add(metrics::wer(std::vector<int>{1, 2, 3, 4}, std::vector<int>{1, 2, 3, 4}));
  acc.add(metrics::wer(std::vector<int>{1}, std::vector<int>{2}));
  const auto t = acc.total();
  CHECK(t.ref_length == 5);
  CHECK(t.wer == doctest::Approx(20.0));
}

namespace {

arch::NetworkGraph single_conv(int t) {
  arch::NetworkGraph g;
  g.name = "conv";
  g.input = Shape{t, 3, 72, 72};
  arch::LayerSpec l;
  l.id = "c";
  l.kind = arch::LayerKind::kConv2d;
  l.in_channels = 3;
  l.out_channels = 64;
  l.kernel = {1, 3};
  l.padding = {0, 1};
  l.stride = {1, 1};
  l.batch_norm_relu = false;
  g.layers.push_back(l);
  arch::propagate_shapes(g);
  return g;
}

}  // namespace

TEST_CASE("single convolution counts") {
  const auto g = single_conv(1);
  CHECK(metrics::count_params(g) == 640);
  CHECK(metrics::count_macs(g, g.input) == 2985984);
}

TEST_CASE("parameter count is additive and excludes aux heads by default") {
  arch::DistillConfig cfg;
  for (int r : {56, 72, 88, 104}) {
    cfg.student_resolution = r;
    const auto g = arch::build_student(cfg);
    std::size_t sum = 0;
    for (const auto& l : g.layers) sum += metrics::layer_params(l);
    CHECK(metrics::count_params(g) == sum);
    std::size_t heads = 0;
    for (const auto& h : g.aux_heads) heads += static_cast<std::size_t>(h.in_channels) * h.classes + h.classes;
    CHECK(metrics::count_params(g, true) == sum + heads);
  }
}

TEST_CASE("macs scale linearly in clip length") {
  arch::DistillConfig cfg;
  const auto g = arch::build_student(cfg);
  const Shape in = g.input;
  const std::size_t m100 = metrics::count_macs(g, Shape{100, in.c, in.h, in.w});
  CHECK(metrics::count_macs(g, Shape{200, in.c, in.h, in.w}) == 2 * m100);
  CHECK(metrics::count_macs(g, Shape{400, in.c, in.h, in.w}) == 4 * m100);
  CHECK(error_of([&] { metrics::count_macs(g, Shape{200, 3, 56, 56}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("resolution delta law") {
  arch::DistillConfig cfg;
  auto params = [&](int r) {
    cfg.student_resolution = r;
    return static_cast<long>(metrics::count_params(arch::build_student(cfg)));
  };
  const int rs[] = {56, 72, 88, 104};
  for (int i = 0; i + 1 < 4; ++i) {
    const long k0 = arch::resolution_kernel(rs[i]), k1 = arch::resolution_kernel(rs[i + 1]);
    CHECK(params(rs[i + 1]) - params(rs[i]) == (k1 * k1 - k0 * k0) * 128L * 128L);
  }
  CHECK(params(104) - params(56) == 48L * 128 * 128);
}

TEST_CASE("latency statistics") {
  const auto cfg = test::tiny_config();
  arch::Network net(arch::build_student(cfg, 4), 1);
  Tensor clip(Shape{4, 3, 16, 16}, 0.5);
  const auto s = metrics::time_inference(net, clip, 10);
  CHECK(s.samples_ms.size() == 10);
  CHECK(s.min_ms <= s.mean_ms);
  CHECK(s.mean_ms <= s.max_ms);
  CHECK_FALSE(s.hardware.empty());
  CHECK(s.hardware == metrics::hardware_descriptor());
  CHECK(error_of([&] { metrics::time_inference(net, clip, 2); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("profile report serialisations") {
  arch::DistillConfig cfg;
  const auto g = arch::build_student(cfg);
  const auto r = metrics::profile(g, g.input);
  CHECK(r.parameter_memory_mb == doctest::Approx(4.0 * r.parameters / (1024.0 * 1024.0)));
  CHECK(r.frame_features == Shape{200, 2048, 7, 7});
  const auto j = nlohmann::json::parse(metrics::profile_json(r));
  CHECK(j.at("parameters").get<std::size_t>() == r.parameters);
  CHECK(j.at("macs").get<std::size_t>() == r.macs);
  CHECK(j.contains("parameter_memory_mb"));
  std::istringstream tsv(metrics::profile_tsv(r));
  std::string head, row;
  std::getline(tsv, head);
  std::getline(tsv, row);
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string cell; std::getline(in, cell, '\t');) out.push_back(cell);
    return out;
  };
  const auto names = split(head), values = split(row);
  REQUIRE(names.size() == values.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "parameters") CHECK(values[i] == std::to_string(r.parameters));
    if (names[i] == "macs") CHECK(values[i] == std::to_string(r.macs));
  }
}
