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

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crkd/arch/graph.hpp"
#include "crkd/arch/network.hpp"

namespace crkd::metrics {

struct WerReport {
  int insertions = 0;
  int deletions = 0;
  int substitutions = 0;
  int ref_length = 0;
  double wer = 0.0;  // percent

  int errors() const { return insertions + deletions + substitutions; }
};

// Unit-cost edit distance between reference and hypothesis; the backtrace
// prefers substitution, then deletion, then insertion when several
// operations reach the same cell cost.
WerReport wer(std::span<const int> reference, std::span<const int> hypothesis);

// Corpus WER: summed operations over summed reference lengths.
class WerAccumulator {
 public:
  void add(const WerReport& r);
  WerReport total() const;

 private:
  WerReport sum_;
};

// Learnable element count of one layer (convolution weights and biases,
// batch-norm affine pairs, fully-connected weights and biases).
std::size_t layer_params(const arch::LayerSpec& layer);
std::size_t layer_macs(const arch::LayerSpec& layer);

// Inference-path parameters; the training-only auxiliary CTC heads are
// included only on request.
std::size_t count_params(const arch::NetworkGraph& graph, bool include_aux_heads = false);

// Multiply-accumulates for one clip of the given shape: convolutions count
// out_elements * in_channels * kernel_area, the classifier counts in * out per
// retained frame, everything else is free.
std::size_t count_macs(const arch::NetworkGraph& graph, const Shape& input);

struct LatencyStats {
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::string hardware;
};

std::string hardware_descriptor();

// Wall-clock time of `repetitions` eval-mode forward passes after one warm-up.
LatencyStats time_inference(arch::Network& network, const Tensor& input, int repetitions);

struct ProfileReport {
  std::string model;
  Shape input;
  std::size_t parameters = 0;
  double parameter_memory_mb = 0.0;  // 4 bytes per parameter, MiB
  std::size_t macs = 0;
  Shape frame_features;
  std::optional<LatencyStats> latency;
  std::optional<double> wer;
};

ProfileReport profile(const arch::NetworkGraph& graph, const Shape& input);

// profile.tsv (header row + value row) and profile.json (key/value).
void write_profile(const ProfileReport& report, const std::filesystem::path& dir);
std::string profile_tsv(const ProfileReport& report);
std::string profile_json(const ProfileReport& report);

}  // namespace crkd::metrics
