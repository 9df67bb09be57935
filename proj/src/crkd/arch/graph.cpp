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

#include "crkd/arch/graph.hpp"

#include <algorithm>

#include "crkd/common/error.hpp"

namespace crkd::arch {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kMaxPoolTemporal: return "maxpool-temporal";
    case LayerKind::kTscmShift: return "tscm-shift";
    case LayerKind::kBottleneck: return "bottleneck";
    case LayerKind::kResidualBottleneck: return "residual-bottleneck";
    case LayerKind::kUpsampleBilinear: return "upsample-bilinear";
    case LayerKind::kGlobalAvgPool: return "global-avg-pool";
    case LayerKind::kFullyConnected: return "fully-connected";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

const char* method_name(Method method) {
  switch (method) {
    case Method::kOriginal: return "orig";
    case Method::kMethod1: return "1";
    case Method::kMethod2: return "2";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "orig" || text == "original") return Method::kOriginal;
  if (text == "1" || text == "method1") return Method::kMethod1;
  if (text == "2" || text == "method2") return Method::kMethod2;
  fail(ErrorCode::kConfiguration,
       "unknown method '" + std::string(text) + "' (expected 1, 2 or orig)");
}

const LayerSpec& NetworkGraph::layer(std::string_view id) const {
  for (const auto& l : layers)
    if (l.id == id) return l;
  fail(ErrorCode::kInvalidArgument, "graph has no layer '" + std::string(id) + "'");
}

NetworkGraph NetworkGraph::with_frames(int frames) const {
  NetworkGraph g = *this;
  g.input.t = frames;
  propagate_shapes(g);
  return g;
}

namespace {

int conv_extent(int size, int kernel, int stride, int padding) {
  return (size + 2 * padding - kernel) / stride + 1;
}

Shape output_of(const LayerSpec& l, const Shape& in) {
  auto mismatch = [&](const std::string& what) {
    fail(ErrorCode::kInvalidArgument, "layer '" + l.id + "' (" +
                                          layer_kind_name(l.kind) + "): " + what +
                                          ", input " + in.str());
  };
  switch (l.kind) {
    case LayerKind::kConv2d: {
      if (in.c != l.in_channels) mismatch("channel mismatch");
      const int oh = conv_extent(in.h, l.kernel.h, l.stride.h, l.padding.h);
      const int ow = conv_extent(in.w, l.kernel.w, l.stride.w, l.padding.w);
      if (oh < 1 || ow < 1) mismatch("kernel larger than padded input");
      return {in.t, l.out_channels, oh, ow};
    }
    case LayerKind::kMaxPool2d: {
      const int oh = conv_extent(in.h, l.kernel.h, l.stride.h, 0);
      const int ow = conv_extent(in.w, l.kernel.w, l.stride.w, 0);
      if (oh < 1 || ow < 1) mismatch("input smaller than pooling window");
      return {in.t, in.c, oh, ow};
    }
    case LayerKind::kMaxPoolTemporal: {
      const int ot = in.t / 2;
      if (ot < 1) mismatch("clip too short for temporal pooling");
      return {ot, in.c, in.h, in.w};
    }
    case LayerKind::kTscmShift:
      if (in.c != l.in_channels) mismatch("channel mismatch");
      return in;
    case LayerKind::kBottleneck:
    case LayerKind::kResidualBottleneck: {
      if (in.c != l.in_channels) mismatch("channel mismatch");
      const int oh = conv_extent(in.h, l.kernel.h, 1, l.padding.h);
      const int ow = conv_extent(in.w, l.kernel.w, 1, l.padding.w);
      if (oh < 1 || ow < 1) mismatch("middle kernel larger than input");
      const Shape out{in.t, l.out_channels, oh, ow};
      if (l.kind == LayerKind::kResidualBottleneck && !(out == in))
        mismatch("residual bottleneck must preserve shape");
      return out;
    }
    case LayerKind::kUpsampleBilinear:
      // kernel holds the target spatial size
      return {in.t, in.c, l.kernel.h, l.kernel.w};
    case LayerKind::kGlobalAvgPool:
      return {in.t, in.c, 1, 1};
    case LayerKind::kFullyConnected:
      if (in.c != l.in_channels || in.h != 1 || in.w != 1)
        mismatch("fully-connected expects T x in_channels x 1 x 1");
      return {in.t, l.out_channels, 1, 1};
    case LayerKind::kSoftmax:
      return in;
  }
  return in;
}

}  // namespace

void propagate_shapes(NetworkGraph& graph) {
  Shape current = graph.input;
  for (auto& l : graph.layers) {
    l.input = current;
    l.output = output_of(l, current);
    current = l.output;
  }
  for (const auto& head : graph.aux_heads) {
    require(head.tap < graph.layers.size(), "aux head '" + head.id + "' taps past the graph");
    require(graph.layers[head.tap].output.c == head.in_channels,
            "aux head '" + head.id + "' channel mismatch");
  }
}

void DistillConfig::validate() const {
  auto cfg = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorCode::kConfiguration, msg);
  };
  cfg(channels >= 1, "channels (N) must be positive");
  cfg(width >= 1 && teacher_width >= 1, "channel widths must be positive");
  cfg(feature_side >= 1, "feature_side must be positive");
  cfg(vocab_size_with_blank >= 2, "vocabulary must include blank plus at least one gloss");
  cfg(alpha >= 0.0 && beta >= 0.0, "alpha and beta must be non-negative");
  cfg(ctc_levels >= 1 && ctc_levels <= 4, "ctc_levels must lie in [1, 4]");
  cfg(gradient_stop_probability >= 0.0 && gradient_stop_probability <= 1.0,
      "gradient_stop_probability must lie in [0, 1]");
  cfg(shift_forward >= 0.0 && shift_backward >= 0.0 && shift_forward + shift_backward <= 1.0,
      "shift fractions must be non-negative with sum at most 1");
  cfg(teacher_resolution >= feature_side, "teacher resolution below feature side");
  if (method != Method::kMethod1) resolution_kernel(student_resolution, feature_side);
}

int resolution_kernel(int resolution, int feature_side) {
  const int k = resolution / 8 - feature_side + 1;
  if (resolution % 8 != 0 || k < 1 || k % 2 == 0) {
    fail(ErrorCode::kUnsupportedResolution,
         "resolution " + std::to_string(resolution) +
             " is outside the supported family (r/8 - " +
             std::to_string(feature_side - 1) + " must be a positive odd integer)");
  }
  return k;
}

int teacher_downsampling_count(int teacher_resolution, int feature_side) {
  int side = teacher_resolution;
  int count = 0;
  while (side / 2 >= feature_side) {
    side /= 2;
    ++count;
  }
  return count;
}

namespace {

LayerSpec conv(std::string id, int in, int out, Window kernel, Window padding,
               Window stride = {1, 1}) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::kConv2d;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = kernel;
  l.padding = padding;
  l.stride = stride;
  return l;
}

LayerSpec pool2d(std::string id) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::kMaxPool2d;
  l.kernel = {2, 2};
  l.stride = {2, 2};
  l.batch_norm_relu = false;
  return l;
}

LayerSpec pool_time(std::string id) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::kMaxPoolTemporal;
  l.kernel = {2, 1};
  l.stride = {2, 1};
  l.batch_norm_relu = false;
  return l;
}

LayerSpec bottleneck(std::string id, int channels, int middle, int k, int pad,
                     bool residual, const DistillConfig& config) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = residual ? LayerKind::kResidualBottleneck : LayerKind::kBottleneck;
  l.in_channels = channels;
  l.out_channels = channels;
  l.middle_channels = middle;
  l.kernel = {k, k};
  l.padding = {pad, pad};
  l.shift_forward = config.shift_forward;
  l.shift_backward = config.shift_backward;
  return l;
}

LayerSpec simple(std::string id, LayerKind kind, int in = 0, int out = 0) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = kind;
  l.in_channels = in;
  l.out_channels = out;
  l.batch_norm_relu = false;
  return l;
}

// The split-kernel stem (1x3 then 3x1 pairs) with `pools` 2x2 max pools.
// The first three pools sit where the architecture table puts them; extra
// pools (method 1) follow the third.
void append_stem(std::vector<LayerSpec>& layers, int w, int pools) {
  const int ramp[8] = {w, w, 2 * w, 2 * w, 4 * w, 4 * w, 4 * w, 4 * w};
  int in = 3;
  int pool_index = 0;
  auto add_pool = [&] { layers.push_back(pool2d("pool" + std::to_string(++pool_index))); };
  for (int i = 0; i < 8; ++i) {
    const bool horizontal = i % 2 == 0;
    layers.push_back(conv("conv" + std::to_string(i + 1), in, ramp[i],
                          horizontal ? Window{1, 3} : Window{3, 1},
                          horizontal ? Window{0, 1} : Window{1, 0}));
    in = ramp[i];
    if ((i == 3 || i == 5 || i == 7) && pool_index < pools) add_pool();
  }
  while (pool_index < pools) add_pool();
}

void append_temporal_and_heads(NetworkGraph& g, int channels, int w,
                               const DistillConfig& config) {
  const std::size_t b3 = g.layers.size() - 1;
  g.frame_feature_layer = b3;
  g.layers.push_back(bottleneck("resbottleneck1", channels, 2 * w, 3, 1, true, config));
  const std::size_t rb1 = g.layers.size() - 1;
  g.layers.push_back(pool_time("tpool1"));
  g.layers.push_back(bottleneck("resbottleneck2", channels, 2 * w, 3, 1, true, config));
  const std::size_t rb2 = g.layers.size() - 1;
  g.layers.push_back(pool_time("tpool2"));
  g.layers.push_back(bottleneck("resbottleneck3", channels, 4 * w, 3, 1, true, config));
  g.layers.push_back(simple("gap", LayerKind::kGlobalAvgPool, channels, channels));
  g.layers.push_back(simple("fc", LayerKind::kFullyConnected, channels,
                            config.vocab_size_with_blank));
  g.layers.push_back(simple("softmax", LayerKind::kSoftmax,
                            config.vocab_size_with_blank, config.vocab_size_with_blank));
  g.classes = config.vocab_size_with_blank;

  const std::size_t taps[3] = {b3, rb1, rb2};
  const char* names[3] = {"aux_bottleneck3", "aux_resbottleneck1", "aux_resbottleneck2"};
  for (int i = 4 - config.ctc_levels; i < 3; ++i)
    g.aux_heads.push_back({names[i], taps[i], channels, config.vocab_size_with_blank});
}

}  // namespace

NetworkGraph build_student(const DistillConfig& config, int frames) {
  config.validate();
  const int k = resolution_kernel(config.student_resolution, config.feature_side);
  const int w = config.width;
  const int n = config.channels;
  NetworkGraph g;
  g.name = "lrinet";
  g.input = {frames, 3, config.student_resolution, config.student_resolution};
  append_stem(g.layers, w, 3);
  g.layers.push_back(conv("conv9", 4 * w, 4 * w, {3, 3}, {1, 1}));
  g.layers.push_back(conv("conv10", 4 * w, n, {1, 1}, {0, 0}));
  g.layers.push_back(bottleneck("bottleneck1", n, 2 * w, k, 0, false, config));
  g.layers.push_back(bottleneck("bottleneck2", n, 2 * w, 3, 1, false, config));
  g.layers.push_back(bottleneck("bottleneck3", n, 4 * w, 3, 1, false, config));
  append_temporal_and_heads(g, n, w, config);
  propagate_shapes(g);
  return g;
}

NetworkGraph build_method1_student(const DistillConfig& config, int frames) {
  config.validate();
  const int w = config.width;
  const int n = config.channels;
  const int pools = teacher_downsampling_count(config.teacher_resolution, config.feature_side);
  int side = config.student_resolution;
  for (int i = 0; i < pools; ++i) side /= 2;
  if (side < 1) {
    fail(ErrorCode::kUnsupportedResolution,
         "resolution " + std::to_string(config.student_resolution) +
             " cannot absorb " + std::to_string(pools) + " fixed downsamplings");
  }
  NetworkGraph g;
  g.name = "lrinet-method1";
  g.input = {frames, 3, config.student_resolution, config.student_resolution};
  append_stem(g.layers, w, pools);
  g.layers.push_back(conv("conv9", 4 * w, 4 * w, {3, 3}, {1, 1}));
  g.layers.push_back(conv("conv10", 4 * w, n, {1, 1}, {0, 0}));
  g.layers.push_back(bottleneck("bottleneck1", n, 2 * w, 3, 1, false, config));
  g.layers.push_back(bottleneck("bottleneck2", n, 2 * w, 3, 1, false, config));
  g.layers.push_back(bottleneck("bottleneck3", n, 4 * w, 3, 1, false, config));
  LayerSpec up = simple("upsample", LayerKind::kUpsampleBilinear, n, n);
  up.kernel = {config.feature_side, config.feature_side};
  g.layers.push_back(up);
  append_temporal_and_heads(g, n, w, config);
  propagate_shapes(g);
  return g;
}

NetworkGraph build_teacher(const DistillConfig& config, int frames) {
  config.validate();
  const int tw = config.teacher_width;
  const int n = config.channels;
  NetworkGraph g;
  g.name = "reference-teacher";
  g.input = {frames, 3, config.teacher_resolution, config.teacher_resolution};
  int side = config.teacher_resolution;
  int in = 3;
  int stage = 0;
  while ((side - 1) / 2 + 1 >= config.feature_side && side > 1) {
    const int out = tw * std::min(8, 1 << stage);
    g.layers.push_back(conv("tconv" + std::to_string(stage + 1), in, out, {3, 3}, {1, 1}, {2, 2}));
    in = out;
    side = (side - 1) / 2 + 1;
    ++stage;
  }
  const int k = side - config.feature_side + 1;
  g.layers.push_back(conv("tproject", in, in, {k, k}, {0, 0}));
  g.layers.push_back(conv("texpand", in, n, {1, 1}, {0, 0}));
  append_temporal_and_heads(g, n, tw, config);
  propagate_shapes(g);
  return g;
}

NetworkGraph build_for_method(const DistillConfig& config, int frames) {
  return config.method == Method::kMethod1 ? build_method1_student(config, frames)
                                           : build_student(config, frames);
}

}  // namespace crkd::arch
