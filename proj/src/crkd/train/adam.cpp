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

#include "crkd/common/error.hpp"
#include "crkd/train/train.hpp"

namespace crkd::train {

AdamW::AdamW(double weight_decay, double beta1, double beta2, double epsilon)
    : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void AdamW::ensure(const arch::Network& network) {
  if (!names_.empty()) return;
  for (const arch::Parameter* p : network.parameters()) {
    if (!p->learnable) continue;
    names_.push_back(p->full_name());
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void AdamW::step(arch::Network& network, double learning_rate) {
  if (network.frozen()) {
    fail(ErrorCode::kFrozenParameter,
         "optimizer step on frozen network '" + network.graph().name + "'");
  }
  ensure(network);
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  std::size_t slot = 0;
  for (arch::Parameter* p : network.parameters()) {
    if (!p->learnable) continue;
    std::vector<double>& m = m_[slot];
    std::vector<double>& v = v_[slot];
    ++slot;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * g);
      v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * g * g);
      double w = p->value[i] * (1.0 - learning_rate * weight_decay_);
      w -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_);
      p->value[i] = static_cast<float>(w);
    }
  }
}

std::vector<arch::NamedArray> AdamW::export_state() const {
  std::vector<arch::NamedArray> out;
  out.push_back({"adam", "steps", {1}, {static_cast<double>(steps_)}});
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const int n = static_cast<int>(m_[i].size());
    out.push_back({names_[i], "m", {n}, m_[i]});
    out.push_back({names_[i], "v", {n}, v_[i]});
  }
  return out;
}

void AdamW::import_state(const arch::Network& network,
                         const std::vector<arch::NamedArray>& state) {
  names_.clear();
  m_.clear();
  v_.clear();
  ensure(network);
  bool have_steps = false;
  for (const auto& a : state) {
    if (a.layer_id == "adam" && a.name == "steps" && a.values.size() == 1) {
      steps_ = static_cast<long>(a.values[0]);
      have_steps = true;
      continue;
    }
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] != a.layer_id) continue;
      std::vector<double>& dst = a.name == "m" ? m_[i] : v_[i];
      if (a.values.size() != dst.size())
        fail(ErrorCode::kConfiguration, "optimizer state for " + a.layer_id + " has wrong size");
      dst = a.values;
    }
  }
  if (!have_steps) fail(ErrorCode::kConfiguration, "optimizer state lacks a step counter");
}

}  // namespace crkd::train
