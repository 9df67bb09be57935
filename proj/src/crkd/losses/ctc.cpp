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
#include <limits>

#include "crkd/common/error.hpp"
#include "crkd/losses/losses.hpp"

namespace crkd::loss {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

void check_label(std::span<const int> label, int classes) {
  require(!label.empty(), "CTC label must contain at least one gloss");
  for (int k : label) {
    require(k != 0, "CTC label must not contain the blank index");
    require(k > 0 && k < classes,
            "CTC label index " + std::to_string(k) + " outside vocabulary of " +
                std::to_string(classes));
  }
}

}  // namespace

int ctc_min_frames(std::span<const int> label) {
  int n = static_cast<int>(label.size());
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++n;
  return n;
}

CtcResult ctc_loss(const LogitsSequence& log_probs, std::span<const int> label, bool with_grad) {
  const int T = static_cast<int>(log_probs.rows());
  const int V = static_cast<int>(log_probs.cols());
  check_label(label, V);
  CtcResult result;
  if (with_grad) result.grad = LogitsSequence::Zero(T, V);
  if (T < ctc_min_frames(label)) {
    result.loss = kInfeasibleCtcLoss;
    result.feasible = false;
    return result;
  }

  const int L = static_cast<int>(label.size());
  const int S = 2 * L + 1;
  std::vector<int> ext(S, 0);
  for (int i = 0; i < L; ++i) ext[2 * i + 1] = label[i];
  auto can_skip = [&](int s) { return s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2]; };

  LogitsSequence alpha = LogitsSequence::Constant(T, S, kNegInf);
  alpha(0, 0) = log_probs(0, 0);
  alpha(0, 1) = log_probs(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = log_add(a, alpha(t - 1, s - 2));
      if (a != kNegInf) alpha(t, s) = a + log_probs(t, ext[s]);
    }
  }
  const double log_likelihood = log_add(alpha(T - 1, S - 1), alpha(T - 1, S - 2));
  result.loss = -log_likelihood;
  if (!with_grad) return result;

  LogitsSequence beta = LogitsSequence::Constant(T, S, kNegInf);
  beta(T - 1, S - 1) = log_probs(T - 1, 0);
  beta(T - 1, S - 2) = log_probs(T - 1, ext[S - 2]);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < S) b = log_add(b, beta(t + 1, s + 1));
      if (s + 2 < S && can_skip(s + 2)) b = log_add(b, beta(t + 1, s + 2));
      if (b != kNegInf) beta(t, s) = b + log_probs(t, ext[s]);
    }
  }

  // alpha and beta both include the emission at t, so
  // d(-ln p)/d ln y_tk = -exp(lse_{s: ext[s]=k}(alpha + beta) - ln y_tk - ln p)
  std::vector<double> occupancy(V);
  for (int t = 0; t < T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (int s = 0; s < S; ++s)
      occupancy[ext[s]] = log_add(occupancy[ext[s]], alpha(t, s) + beta(t, s));
    for (int k = 0; k < V; ++k) {
      if (occupancy[k] == kNegInf) continue;
      result.grad(t, k) = -std::exp(occupancy[k] - log_probs(t, k) - log_likelihood);
    }
  }
  return result;
}

MultiCtcResult multilevel_ctc(const std::vector<LogitsSequence>& level_log_probs,
                              std::span<const int> label, bool with_grad) {
  require(!level_log_probs.empty(), "multi-level CTC needs at least one level");
  MultiCtcResult result;
  for (const auto& lp : level_log_probs) {
    CtcResult r = ctc_loss(lp, label, with_grad);
    result.per_level.push_back(r.loss);
    result.loss += r.loss;
    result.feasible = result.feasible && r.feasible;
    if (with_grad) result.grads.push_back(std::move(r.grad));
  }
  return result;
}

}  // namespace crkd::loss
