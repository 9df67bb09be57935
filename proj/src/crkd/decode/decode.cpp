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

#include "crkd/decode/decode.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "crkd/common/error.hpp"

namespace crkd::decode {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

struct Masses {
  double blank = kNegInf;
  double label = kNegInf;
};

struct State {
  std::vector<int> prefix;
  bool ends_blank;
  double mass;
};

bool state_before(const State& a, const State& b) {
  if (a.mass != b.mass) return a.mass > b.mass;
  if (a.prefix != b.prefix) return a.prefix < b.prefix;
  return a.ends_blank && !b.ends_blank;
}

}  // namespace

std::vector<int> collapse(std::span<const int> path) {
  std::vector<int> out;
  int previous = -1;
  for (int k : path) {
    if (k != previous && k != 0) out.push_back(k);
    previous = k;
  }
  return out;
}

std::vector<int> greedy_decode(const LogitsSequence& probs) {
  std::vector<int> path(probs.rows());
  for (Eigen::Index t = 0; t < probs.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probs.cols(); ++k)
      if (probs(t, k) > probs(t, best)) best = k;
    path[t] = static_cast<int>(best);
  }
  return collapse(path);
}

std::vector<int> beam_search_decode(const LogitsSequence& probs, const BeamConfig& config) {
  require(config.width >= 1, "beam width must be at least 1");
  const Eigen::Index V = probs.cols();
  std::vector<State> beam{{{}, true, 0.0}};
  std::vector<double> log_y(V);

  for (Eigen::Index t = 0; t < probs.rows(); ++t) {
    for (Eigen::Index k = 0; k < V; ++k) log_y[k] = std::log(probs(t, k));
    std::map<std::vector<int>, Masses> next;
    for (const State& s : beam) {
      Masses& same = next[s.prefix];
      same.blank = log_add(same.blank, s.mass + log_y[0]);
      for (Eigen::Index k = 1; k < V; ++k) {
        if (config.prune_log_threshold && log_y[k] < *config.prune_log_threshold) continue;
        const int c = static_cast<int>(k);
        const double m = s.mass + log_y[k];
        if (!s.prefix.empty() && s.prefix.back() == c && !s.ends_blank) {
          same.label = log_add(same.label, m);
        } else {
          std::vector<int> extended = s.prefix;
          extended.push_back(c);
          Masses& e = next[extended];
          e.label = log_add(e.label, m);
        }
      }
    }
    std::vector<State> candidates;
    candidates.reserve(next.size() * 2);
    for (auto& [prefix, masses] : next) {
      if (masses.blank != kNegInf) candidates.push_back({prefix, true, masses.blank});
      if (masses.label != kNegInf) candidates.push_back({prefix, false, masses.label});
    }
    if (candidates.size() > config.width) {
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(config.width),
                        candidates.end(), state_before);
      candidates.resize(config.width);
    } else {
      std::sort(candidates.begin(), candidates.end(), state_before);
    }
    beam = std::move(candidates);
  }

  std::map<std::vector<int>, double> totals;
  for (const State& s : beam) {
    auto [it, inserted] = totals.try_emplace(s.prefix, s.mass);
    if (!inserted) it->second = log_add(it->second, s.mass);
  }
  const std::vector<int>* best = nullptr;
  double best_mass = kNegInf;
  for (const auto& [prefix, mass] : totals) {
    // map order is lexicographic, so strict > keeps the smallest prefix on ties
    if (best == nullptr || mass > best_mass) {
      best = &prefix;
      best_mass = mass;
    }
  }
  return best ? *best : std::vector<int>{};
}

}  // namespace crkd::decode
