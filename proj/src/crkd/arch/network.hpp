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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "crkd/arch/graph.hpp"
#include "crkd/arch/modules.hpp"
#include "crkd/common/logits.hpp"

namespace crkd::arch {

struct ForwardResult {
  Tensor frame_features;                        // T x N x side x side
  std::vector<LogitsSequence> level_log_probs;  // shallow to deep; back() is the main head

  const LogitsSequence& main_log_probs() const { return level_log_probs.back(); }
  // Softmax outputs (rows sum to one) of every level.
  std::vector<LogitsSequence> level_probs() const;
};

// Gradients of a scalar loss with respect to the forward outputs. Empty
// entries contribute nothing.
struct BackwardSeed {
  Tensor frame_features;
  std::vector<LogitsSequence> level_log_probs;
  // Drops the gradient flowing from the temporal extractor into the frame
  // extractor; gradients attached at the boundary itself still pass.
  bool stop_at_boundary = false;
};

class Network {
 public:
  Network(NetworkGraph graph, std::uint64_t seed);

  const NetworkGraph& graph() const { return graph_; }
  int levels() const { return graph_.levels(); }

  ForwardResult forward(const Tensor& video, Mode mode);
  void backward(const BackwardSeed& seed);

  // Every parameter and buffer in a fixed order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t learnable_count() const;
  void zero_grad();

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // CRC-32 over the float32 image of every parameter and buffer.
  std::uint32_t weights_hash() const;

 private:
  struct Head {
    std::size_t tap;
    GlobalAvgPool pool;
    std::unique_ptr<FullyConnected> fc;
    LogSoftmax softmax;
  };

  NetworkGraph graph_;
  std::vector<std::unique_ptr<Module>> layers_;
  std::vector<Head> heads_;
  bool frozen_ = false;
};

struct TeacherOutputs {
  Tensor frame_features;  // T x N_t x side x side
  LogitsSequence logits;  // T/4 x classes, probabilities
};

// Student forward: frame features plus one probability sequence per level.
struct StudentOutputs {
  Tensor frame_features;
  std::vector<LogitsSequence> level_logits;
};

StudentOutputs forward_student(Network& student, const Tensor& video);
TeacherOutputs forward_teacher(const Network& teacher, const Tensor& video);

// Weights file: see README for the byte layout. Buffers (batch-norm running
// statistics) are stored alongside learnable parameters.
struct NamedArray {
  std::string layer_id;
  std::string name;
  std::vector<int> dims;
  std::vector<double> values;
};

void write_weights_file(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_weights_file(const std::filesystem::path& path);

std::vector<NamedArray> export_weights(const Network& network);
void import_weights(Network& network, const std::vector<NamedArray>& arrays);

void save_weights(const Network& network, const std::filesystem::path& path);
void load_weights(Network& network, const std::filesystem::path& path);

}  // namespace crkd::arch
