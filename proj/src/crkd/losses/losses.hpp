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

#include <optional>
#include <span>
#include <vector>

#include "crkd/common/logits.hpp"
#include "crkd/common/tensor.hpp"

namespace crkd::loss {

// Loss reported for labels that cannot be aligned to the available frames.
inline constexpr double kInfeasibleCtcLoss = 1e30;

struct CtcResult {
  double loss = 0.0;
  bool feasible = true;
  LogitsSequence grad;  // d loss / d log_probs; zero when infeasible
};

// Minimum number of frames a CTC alignment of `label` needs: its length plus
// one separating blank per adjacent repeat.
int ctc_min_frames(std::span<const int> label);

// -ln p(label | frames) by the forward-backward recursion over the
// blank-interleaved label, entirely in log space. Rows of log_probs are
// per-frame log-probabilities (column 0 is blank).
CtcResult ctc_loss(const LogitsSequence& log_probs, std::span<const int> label,
                   bool with_grad = true);

struct MultiCtcResult {
  std::vector<double> per_level;
  double loss = 0.0;
  bool feasible = true;
  std::vector<LogitsSequence> grads;
};

// Sum of per-level CTC losses (-ln of the product of level likelihoods).
MultiCtcResult multilevel_ctc(const std::vector<LogitsSequence>& level_log_probs,
                              std::span<const int> label, bool with_grad = true);

struct MseResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d student
};

// Mean over every element of the squared difference.
MseResult mse_feature_loss(const Tensor& student, const Tensor& teacher, bool with_grad = true);

enum class KlDirection {
  kStudentFirst,  // sum p ln(p / q) with p = student, q = teacher (default)
  kTeacherFirst,  // sum q ln(q / p)
};

inline constexpr double kKlFloor = 1e-12;

struct KlResult {
  double loss = 0.0;
  LogitsSequence grad;  // d loss / d student log-probabilities
};

// Per-frame KL divergence averaged over frames. Student terms with zero
// probability contribute nothing; the teacher side is clamped below by 1e-12.
double kldiv_loss(const LogitsSequence& student_probs, const LogitsSequence& teacher_probs,
                  KlDirection direction = KlDirection::kStudentFirst);
KlResult kldiv_from_log_probs(const LogitsSequence& student_log_probs,
                              const LogitsSequence& teacher_probs,
                              KlDirection direction = KlDirection::kStudentFirst,
                              bool with_grad = true);

struct LossBreakdown {
  std::vector<double> ctc_per_level;
  double mse = 0.0;
  double kldiv = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double total = 0.0;
  bool feasible = true;

  // Sum of the CTC levels in order, then + alpha*mse, then + beta*kldiv.
  double recompute_total() const;
};

struct HybridInputs {
  const std::vector<LogitsSequence>* level_log_probs = nullptr;
  std::span<const int> label;
  const Tensor* student_features = nullptr;
  const Tensor* teacher_features = nullptr;  // required when alpha > 0
  const LogitsSequence* teacher_probs = nullptr;  // required when beta > 0
  double alpha = 0.0;
  double beta = 0.0;
  KlDirection direction = KlDirection::kStudentFirst;
};

struct HybridResult {
  LossBreakdown breakdown;
  std::vector<LogitsSequence> level_grads;  // d total / d level log-probs
  Tensor feature_grad;                      // d total / d student features (empty if alpha == 0)
};

HybridResult hybrid_loss(const HybridInputs& inputs, bool with_grad = true);

}  // namespace crkd::loss
