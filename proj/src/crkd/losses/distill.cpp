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
#include <cmath>

#include "crkd/common/error.hpp"
#include "crkd/losses/losses.hpp"

namespace crkd::loss {

MseResult mse_feature_loss(const Tensor& student, const Tensor& teacher, bool with_grad) {
  if (!(student.shape() == teacher.shape())) {
    fail(ErrorCode::kInvalidArgument, "MSE feature loss: student shape " +
                                          student.shape().str() + " vs teacher shape " +
                                          teacher.shape().str());
  }
  require(student.size() > 0, "MSE feature loss of empty tensors");
  MseResult result;
  const double n = static_cast<double>(student.size());
  const double* s = student.data();
  const double* t = teacher.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < student.size(); ++i) sum += (s[i] - t[i]) * (s[i] - t[i]);
  result.loss = sum / n;
  if (with_grad) {
    result.grad = Tensor(student.shape());
    double* g = result.grad.data();
    for (std::size_t i = 0; i < student.size(); ++i) g[i] = 2.0 * (s[i] - t[i]) / n;
  }
  return result;
}

namespace {

void check_kl_shapes(const LogitsSequence& student, const LogitsSequence& teacher) {
  if (student.rows() != teacher.rows()) {
    fail(ErrorCode::kInvalidArgument,
         "KL divergence: student has " + std::to_string(student.rows()) +
             " frames, teacher has " + std::to_string(teacher.rows()));
  }
  require(student.cols() == teacher.cols(), "KL divergence: class counts differ");
  require(student.rows() > 0, "KL divergence of empty sequences");
}

}  // namespace

double kldiv_loss(const LogitsSequence& student_probs, const LogitsSequence& teacher_probs,
                  KlDirection direction) {
  check_kl_shapes(student_probs, teacher_probs);
  double total = 0.0;
  for (Eigen::Index t = 0; t < student_probs.rows(); ++t) {
    for (Eigen::Index i = 0; i < student_probs.cols(); ++i) {
      const double p = student_probs(t, i);
      const double q = teacher_probs(t, i);
      if (direction == KlDirection::kStudentFirst) {
        if (p > 0.0) total += p * (std::log(p) - std::log(std::max(q, kKlFloor)));
      } else {
        if (q > 0.0) total += q * (std::log(q) - std::log(std::max(p, kKlFloor)));
      }
    }
  }
  return total / static_cast<double>(student_probs.rows());
}

KlResult kldiv_from_log_probs(const LogitsSequence& student_log_probs,
                              const LogitsSequence& teacher_probs, KlDirection direction,
                              bool with_grad) {
  check_kl_shapes(student_log_probs, teacher_probs);
  const Eigen::Index T = student_log_probs.rows();
  const double inv_t = 1.0 / static_cast<double>(T);
  KlResult result;
  if (with_grad) result.grad = LogitsSequence::Zero(T, student_log_probs.cols());
  double total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < student_log_probs.cols(); ++i) {
      const double lp = student_log_probs(t, i);
      const double p = std::exp(lp);
      const double q = teacher_probs(t, i);
      if (direction == KlDirection::kStudentFirst) {
        const double log_q = std::log(std::max(q, kKlFloor));
        if (p > 0.0) total += p * (lp - log_q);
        if (with_grad) result.grad(t, i) = p * (lp - log_q + 1.0) * inv_t;
      } else {
        if (q > 0.0) total += q * (std::log(q) - lp);
        if (with_grad) result.grad(t, i) = -q * inv_t;
      }
    }
  }
  result.loss = total * inv_t;
  return result;
}

double LossBreakdown::recompute_total() const {
  double sum = 0.0;
  for (double c : ctc_per_level) sum += c;
  sum += alpha * mse;
  sum += beta * kldiv;
  return sum;
}

HybridResult hybrid_loss(const HybridInputs& in, bool with_grad) {
  require(in.level_log_probs != nullptr, "hybrid loss needs level outputs");
  require(in.alpha >= 0.0 && in.beta >= 0.0, "alpha and beta must be non-negative");
  HybridResult result;
  LossBreakdown& b = result.breakdown;
  b.alpha = in.alpha;
  b.beta = in.beta;

  MultiCtcResult ctc = multilevel_ctc(*in.level_log_probs, in.label, with_grad);
  b.ctc_per_level = ctc.per_level;
  b.feasible = ctc.feasible;
  if (with_grad) result.level_grads = std::move(ctc.grads);

  if (in.alpha > 0.0) {
    require(in.student_features && in.teacher_features,
            "alpha > 0 requires student and teacher frame features");
    MseResult mse = mse_feature_loss(*in.student_features, *in.teacher_features, with_grad);
    b.mse = mse.loss;
    if (with_grad) {
      result.feature_grad = std::move(mse.grad);
      result.feature_grad.scale(in.alpha);
    }
  }
  if (in.beta > 0.0) {
    require(in.teacher_probs != nullptr, "beta > 0 requires teacher probabilities");
    KlResult kl = kldiv_from_log_probs(in.level_log_probs->back(), *in.teacher_probs,
                                       in.direction, with_grad);
    b.kldiv = kl.loss;
    if (with_grad) result.level_grads.back() += in.beta * kl.grad;
  }
  b.total = b.recompute_total();
  return result;
}

}  // namespace crkd::loss
