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

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "crkd/common/error.hpp"
#include "crkd/metrics/metrics.hpp"

namespace crkd::metrics {
namespace {

using arch::LayerKind;
using arch::LayerSpec;

std::size_t conv_params(std::size_t ci, std::size_t co, const arch::Window& k, bool bn) {
  return ci * co * k.h * k.w + co + (bn ? 2 * co : 0);
}

std::size_t conv_macs(const Shape& out, std::size_t ci, const arch::Window& k) {
  return out.size() * ci * k.h * k.w;
}

}  // namespace

std::size_t layer_params(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::kConv2d:
      return conv_params(l.in_channels, l.out_channels, l.kernel, l.batch_norm_relu);
    case LayerKind::kBottleneck:
    case LayerKind::kResidualBottleneck:
      return conv_params(l.in_channels, l.middle_channels, {1, 1}, true) +
             conv_params(l.middle_channels, l.middle_channels, l.kernel, true) +
             conv_params(l.middle_channels, l.out_channels, {1, 1}, true);
    case LayerKind::kFullyConnected:
      return static_cast<std::size_t>(l.in_channels) * l.out_channels + l.out_channels;
    default:
      return 0;
  }
}

std::size_t layer_macs(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::kConv2d:
      return conv_macs(l.output, l.in_channels, l.kernel);
    case LayerKind::kBottleneck:
    case LayerKind::kResidualBottleneck: {
      const Shape reduced{l.input.t, l.middle_channels, l.input.h, l.input.w};
      const Shape middle{l.output.t, l.middle_channels, l.output.h, l.output.w};
      return conv_macs(reduced, l.in_channels, {1, 1}) +
             conv_macs(middle, l.middle_channels, l.kernel) +
             conv_macs(l.output, l.middle_channels, {1, 1});
    }
    case LayerKind::kFullyConnected:
      return static_cast<std::size_t>(l.input.t) * l.in_channels * l.out_channels;
    default:
      return 0;
  }
}

std::size_t count_params(const arch::NetworkGraph& graph, bool include_aux_heads) {
  std::size_t n = 0;
  for (const auto& l : graph.layers) n += layer_params(l);
  if (include_aux_heads) {
    for (const auto& h : graph.aux_heads)
      n += static_cast<std::size_t>(h.in_channels) * h.classes + h.classes;
  }
  return n;
}

std::size_t count_macs(const arch::NetworkGraph& graph, const Shape& input) {
  if (input.c != graph.input.c || input.h != graph.input.h || input.w != graph.input.w) {
    fail(ErrorCode::kInvalidArgument, "graph '" + graph.name + "' expects T x " +
                                          std::to_string(graph.input.c) + " x " +
                                          std::to_string(graph.input.h) + " x " +
                                          std::to_string(graph.input.w) + ", got " + input.str());
  }
  require(input.t >= 1, "clip must have at least one frame");
  const arch::NetworkGraph g = graph.with_frames(input.t);
  std::size_t n = 0;
  for (const auto& l : g.layers) n += layer_macs(l);
  return n;
}

std::string hardware_descriptor() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + ", " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) +
         " logical cores";
}

LatencyStats time_inference(arch::Network& network, const Tensor& input, int repetitions) {
  require(repetitions >= 3, "time_inference needs at least 3 repetitions");
  using Clock = std::chrono::steady_clock;
  network.forward(input, arch::Mode::kEval);
  LatencyStats stats;
  for (int i = 0; i < repetitions; ++i) {
    const auto start = Clock::now();
    network.forward(input, arch::Mode::kEval);
    stats.samples_ms.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - start).count());
  }
  double sum = 0.0;
  for (double s : stats.samples_ms) sum += s;
  stats.mean_ms = sum / repetitions;
  const auto [lo, hi] = std::minmax_element(stats.samples_ms.begin(), stats.samples_ms.end());
  stats.min_ms = *lo;
  stats.max_ms = *hi;
  stats.hardware = hardware_descriptor();
  return stats;
}

ProfileReport profile(const arch::NetworkGraph& graph, const Shape& input) {
  ProfileReport r;
  r.model = graph.name;
  r.input = input;
  r.parameters = count_params(graph);
  r.parameter_memory_mb = 4.0 * static_cast<double>(r.parameters) / (1024.0 * 1024.0);
  r.macs = count_macs(graph, input);
  r.frame_features = graph.with_frames(input.t).frame_feature_shape();
  return r;
}

namespace {

nlohmann::ordered_json to_json(const ProfileReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["input"] = {r.input.t, r.input.c, r.input.h, r.input.w};
  j["parameters"] = r.parameters;
  j["parameters_m"] = static_cast<double>(r.parameters) / 1e6;
  j["parameter_memory_mb"] = r.parameter_memory_mb;
  j["macs"] = r.macs;
  j["gmacs"] = static_cast<double>(r.macs) / 1e9;
  j["frame_features"] = {r.frame_features.t, r.frame_features.c, r.frame_features.h,
                         r.frame_features.w};
  if (r.latency) {
    j["latency_ms"] = {{"mean", r.latency->mean_ms},
                       {"min", r.latency->min_ms},
                       {"max", r.latency->max_ms},
                       {"repetitions", r.latency->samples_ms.size()},
                       {"hardware", r.latency->hardware}};
  }
  if (r.wer) j["wer"] = *r.wer;
  return j;
}

}  // namespace

std::string profile_json(const ProfileReport& report) { return to_json(report).dump(2) + "\n"; }

std::string profile_tsv(const ProfileReport& r) {
  std::ostringstream head;
  std::ostringstream row;
  row << std::setprecision(10);
  auto col = [&](const std::string& name, const auto& value) {
    if (head.tellp() > 0) {
      head << '\t';
      row << '\t';
    }
    head << name;
    row << value;
  };
  col("model", r.model);
  col("input", r.input.str());
  col("parameters", r.parameters);
  col("parameters_m", static_cast<double>(r.parameters) / 1e6);
  col("parameter_memory_mb", r.parameter_memory_mb);
  col("macs", r.macs);
  col("gmacs", static_cast<double>(r.macs) / 1e9);
  col("frame_features", r.frame_features.str());
  if (r.latency) {
    col("latency_mean_ms", r.latency->mean_ms);
    col("latency_min_ms", r.latency->min_ms);
    col("latency_max_ms", r.latency->max_ms);
    col("hardware", r.latency->hardware);
  }
  if (r.wer) col("wer", *r.wer);
  return head.str() + "\n" + row.str() + "\n";
}

void write_profile(const ProfileReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) fail(ErrorCode::kIo, "cannot write " + p.string());
    out << text;
  };
  write(dir / "profile.tsv", profile_tsv(report));
  write(dir / "profile.json", profile_json(report));
}

}  // namespace crkd::metrics
