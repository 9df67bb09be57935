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

#include "crkd/arch/network.hpp"

#include <zlib.h>

#include <cmath>

#include "crkd/common/error.hpp"

namespace crkd::arch {
namespace {

LogitsSequence to_matrix(const Tensor& t) {
  const Shape& s = t.shape();
  return Eigen::Map<const LogitsSequence>(t.data(), s.t, s.c);
}

Tensor to_tensor(const LogitsSequence& m) {
  Tensor t(Shape{static_cast<int>(m.rows()), static_cast<int>(m.cols()), 1, 1});
  Eigen::Map<LogitsSequence>(t.data(), m.rows(), m.cols()) = m;
  return t;
}

}  // namespace

std::vector<LogitsSequence> ForwardResult::level_probs() const {
  std::vector<LogitsSequence> out;
  out.reserve(level_log_probs.size());
  for (const auto& lp : level_log_probs) out.push_back(lp.array().exp().matrix());
  return out;
}

Network::Network(NetworkGraph graph, std::uint64_t seed) : graph_(std::move(graph)) {
  Rng rng(seed);
  for (const auto& spec : graph_.layers) layers_.push_back(make_module(spec, rng));
  for (const auto& aux : graph_.aux_heads) {
    Head head;
    head.tap = aux.tap;
    head.fc = std::make_unique<FullyConnected>(aux.id, aux.in_channels, aux.classes, rng);
    heads_.push_back(std::move(head));
  }
}

ForwardResult Network::forward(const Tensor& video, Mode mode) {
  const Shape& in = video.shape();
  if (in.c != graph_.input.c || in.h != graph_.input.h || in.w != graph_.input.w) {
    fail(ErrorCode::kInvalidArgument,
         "network '" + graph_.name + "' expects T x " + std::to_string(graph_.input.c) + " x " +
             std::to_string(graph_.input.h) + " x " + std::to_string(graph_.input.w) +
             " input, got " + in.str());
  }
  require(in.t >= 4, "clip of " + std::to_string(in.t) + " frames is shorter than the 4-frame "
                     "temporal reduction");
  ForwardResult result;
  Tensor a = video;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    a = layers_[i]->forward(a, mode);
    if (i == graph_.frame_feature_layer) result.frame_features = a;
    for (auto& head : heads_) {
      if (head.tap != i) continue;
      Tensor h = head.pool.forward(a, mode);
      h = head.fc->forward(h, mode);
      h = head.softmax.forward(h, mode);
      result.level_log_probs.push_back(to_matrix(h));
    }
  }
  result.level_log_probs.push_back(to_matrix(a));
  return result;
}

void Network::backward(const BackwardSeed& seed) {
  if (frozen_) {
    fail(ErrorCode::kFrozenParameter,
         "network '" + graph_.name + "' is frozen; gradient writes are not allowed");
  }
  const int levels = graph_.levels();
  require(seed.level_log_probs.empty() ||
              static_cast<int>(seed.level_log_probs.size()) == levels,
          "backward seed must provide 0 or " + std::to_string(levels) + " level gradients");
  auto level_grad = [&](int level) -> const LogitsSequence* {
    if (seed.level_log_probs.empty()) return nullptr;
    const LogitsSequence& g = seed.level_log_probs[level];
    return g.size() == 0 ? nullptr : &g;
  };

  const LogitsSequence* main = level_grad(levels - 1);
  Tensor g = main ? to_tensor(*main) : Tensor();
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    if (idx == graph_.frame_feature_layer) {
      if (seed.stop_at_boundary && !g.empty()) g.fill(0.0);
      if (!seed.frame_features.empty()) {
        if (g.empty()) g = Tensor(seed.frame_features.shape());
        g.add(seed.frame_features);
      }
    }
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      if (heads_[h].tap != idx) continue;
      const LogitsSequence* lg = level_grad(static_cast<int>(h));
      if (!lg) continue;
      Tensor hg = heads_[h].softmax.backward(to_tensor(*lg));
      hg = heads_[h].fc->backward(hg);
      hg = heads_[h].pool.backward(hg);
      if (g.empty()) g = Tensor(hg.shape());
      g.add(hg);
    }
    if (g.empty()) continue;  // nothing upstream of here carries gradient yet
    g = layers_[idx]->backward(g);
  }
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) l->collect(out);
  for (auto& h : heads_) h.fc->collect(out);
  return out;
}

std::vector<const Parameter*> Network::parameters() const {
  auto params = const_cast<Network*>(this)->parameters();
  return {params.begin(), params.end()};
}

std::size_t Network::learnable_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters())
    if (p->learnable) n += p->value.size();
  return n;
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::uint32_t Network::weights_hash() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const Parameter* p : parameters()) {
    for (double v : p->value) {
      const float f = static_cast<float>(v);
      crc = crc32(crc, reinterpret_cast<const Bytef*>(&f), sizeof f);
    }
  }
  return static_cast<std::uint32_t>(crc);
}

StudentOutputs forward_student(Network& student, const Tensor& video) {
  ForwardResult r = student.forward(video, Mode::kEval);
  return {std::move(r.frame_features), r.level_probs()};
}

TeacherOutputs forward_teacher(const Network& teacher, const Tensor& video) {
  const Shape& want = teacher.graph().input;
  if (video.shape().h != want.h || video.shape().w != want.w) {
    fail(ErrorCode::kInvalidArgument,
         "teacher expects " + std::to_string(want.h) + "x" + std::to_string(want.w) +
             " frames, got " + video.shape().str());
  }
  // Eval-mode forward only reads parameters; the caches it fills are scratch.
  ForwardResult r = const_cast<Network&>(teacher).forward(video, Mode::kEval);
  return {std::move(r.frame_features), r.main_log_probs().array().exp().matrix()};
}

}  // namespace crkd::arch
