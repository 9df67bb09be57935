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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "crkd/common/tensor.hpp"

namespace crkd::arch {

enum class LayerKind {
  kConv2d,
  kMaxPool2d,
  kMaxPoolTemporal,
  kTscmShift,
  kBottleneck,
  kResidualBottleneck,
  kUpsampleBilinear,
  kGlobalAvgPool,
  kFullyConnected,
  kSoftmax,
};

const char* layer_kind_name(LayerKind kind);

struct Window {
  int h = 1;
  int w = 1;
  bool operator==(const Window&) const = default;
};

// One row of the architecture table. For bottlenecks `kernel` and `padding`
// describe the middle convolution; the reduce/expand convolutions are 1x1.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::kConv2d;
  int in_channels = 0;
  int out_channels = 0;
  int middle_channels = 0;
  Window kernel;
  Window stride;
  Window padding;
  bool batch_norm_relu = true;
  double shift_forward = 0.125;
  double shift_backward = 0.125;
  Shape input;
  Shape output;
};

// Training-only CTC classifier (global average pool, fully connected,
// softmax) reading the output of layers[tap].
struct AuxHead {
  std::string id;
  std::size_t tap = 0;
  int in_channels = 0;
  int classes = 0;
};

struct NetworkGraph {
  std::string name;
  Shape input;
  std::vector<LayerSpec> layers;  // inference path, ends with the softmax
  std::size_t frame_feature_layer = 0;
  std::vector<AuxHead> aux_heads;  // shallow to deep
  int classes = 0;

  const LayerSpec& layer(std::string_view id) const;
  Shape frame_feature_shape() const { return layers[frame_feature_layer].output; }
  Shape output_shape() const { return layers.back().output; }
  int levels() const { return static_cast<int>(aux_heads.size()) + 1; }

  // Re-derives every layer shape for a clip of `frames` frames.
  NetworkGraph with_frames(int frames) const;
};

// Recomputes layer input/output shapes from graph.input, checking that every
// layer accepts its predecessor's output.
void propagate_shapes(NetworkGraph& graph);

enum class Method { kOriginal, kMethod1, kMethod2 };

const char* method_name(Method method);
Method parse_method(std::string_view text);

struct DistillConfig {
  int student_resolution = 72;
  int teacher_resolution = 224;
  int feature_side = 7;
  int channels = 2048;  // N, the frame-level feature width shared with the teacher
  int width = 64;       // first stem width; the stem ramps w, w, 2w, 2w, 4w...
  int teacher_width = 64;
  int vocab_size_with_blank = 1296;
  double alpha = 140.0;
  double beta = 120.0;
  int ctc_levels = 4;
  Method method = Method::kMethod2;
  bool gradient_stop = false;
  double gradient_stop_probability = 0.5;
  double shift_forward = 0.125;
  double shift_backward = 0.125;
  bool kl_reversed = false;

  void validate() const;
};

// Kernel of the first bottleneck's middle convolution that maps the
// post-pooling map of side r/8 onto feature_side x feature_side with zero
// padding: k = r/8 - feature_side + 1 (r/8 - 6 for 7x7 features).
int resolution_kernel(int resolution, int feature_side = 7);

NetworkGraph build_student(const DistillConfig& config, int frames = 200);
NetworkGraph build_method1_student(const DistillConfig& config, int frames = 200);
NetworkGraph build_teacher(const DistillConfig& config, int frames = 200);
// Dispatches on config.method (kOriginal uses the method-2 student).
NetworkGraph build_for_method(const DistillConfig& config, int frames = 200);

// Number of 2x2 halvings that take the teacher resolution down to
// feature_side; method 1 keeps this count for every input resolution.
int teacher_downsampling_count(int teacher_resolution, int feature_side);

}  // namespace crkd::arch
