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

#include <random>

#include "../oracles/gradcheck.hpp"
#include "../oracles/oracles.hpp"
#include "crkd/losses/losses.hpp"
#include "fixtures.hpp"

using namespace crkd;
using crkd::test::error_of;

namespace {

LogitsSequence log_of(const oracle::Matrix& m) {
  LogitsSequence out(m.size(), m[0].size());
  for (std::size_t t = 0; t < m.size(); ++t)
    for (std::size_t k = 0; k < m[0].size(); ++k) out(t, k) = std::log(m[t][k]);
  return out;
}

LogitsSequence random_log_probs(int T, int V, std::mt19937_64& gen) {
  return log_of(oracle::random_distribution(T, V, gen));
}

}  // namespace

TEST_CASE("ctc agrees with path enumeration") {
  std::mt19937_64 gen(21);
  for (int T = 1; T <= 5; ++T) {
    for (const std::vector<int>& label :
         {std::vector<int>{1}, std::vector<int>{1, 2}, std::vector<int>{2, 2}, std::vector<int>{1, 2, 1}}) {
      if (loss::ctc_min_frames(label) > T) continue;
      for (int trial = 0; trial < 5; ++trial) {
        const auto m = oracle::random_distribution(T, 3, gen);
        const auto r = loss::ctc_loss(log_of(m), label, false);
        CHECK(r.feasible);
        CHECK(std::abs(r.loss - oracle::ctc_by_enumeration(m, label)) < 1e-9);
      }
    }
  }
}

TEST_CASE("ctc minimum frames and infeasible labels") {
  CHECK(loss::ctc_min_frames(std::vector<int>{1, 2, 3}) == 3);
  CHECK(loss::ctc_min_frames(std::vector<int>{1, 1, 2, 2}) == 6);
  std::mt19937_64 gen(1);
  const auto r = loss::ctc_loss(random_log_probs(2, 3, gen), std::vector<int>{1, 1});
  CHECK_FALSE(r.feasible);
  CHECK(r.loss == loss::kInfeasibleCtcLoss);
  CHECK(r.grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(error_of([&] { loss::ctc_loss(random_log_probs(4, 3, gen), std::vector<int>{}); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(error_of([&] { loss::ctc_loss(random_log_probs(4, 3, gen), std::vector<int>{3}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("ctc gradient matches finite differences") {
  std::mt19937_64 gen(4);
  const std::vector<int> label{1, 2, 2};
  LogitsSequence lp = random_log_probs(7, 3, gen);
  const auto r = loss::ctc_loss(lp, label, true);
  std::vector<double> flat(lp.data(), lp.data() + lp.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double numeric = oracle::central_difference(flat, i, 1e-6, [&] {
      LogitsSequence m = Eigen::Map<LogitsSequence>(flat.data(), lp.rows(), lp.cols());
      return loss::ctc_loss(m, label, false).loss;
    });
    CHECK(oracle::relative_error(r.grad.data()[i], numeric) < 1e-6);
  }
}

TEST_CASE("multilevel ctc sums its levels") {
  std::mt19937_64 gen(8);
  const std::vector<int> label{2, 1};
  const LogitsSequence a = random_log_probs(6, 3, gen);
  const double single = loss::ctc_loss(a, label, false).loss;
  for (int m = 1; m <= 4; ++m) {
    const auto r = loss::multilevel_ctc(std::vector<LogitsSequence>(m, a), label, false);
    CHECK(r.loss == m * single);
    CHECK(r.per_level.size() == static_cast<std::size_t>(m));
  }
  CHECK(error_of([&] { loss::multilevel_ctc({}, label); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("mse is the mean over every element") {
  Tensor s(Shape{1, 2, 1, 2}, {1.0, 2.0, 3.0, 4.0});
  Tensor t(Shape{1, 2, 1, 2}, {1.0, 0.0, 3.0, 8.0});
  const auto r = loss::mse_feature_loss(s, t);
  CHECK(r.loss == doctest::Approx((4.0 + 16.0) / 4.0));
  CHECK(r.grad.values()[1] == doctest::Approx(2.0 * 2.0 / 4.0));
  CHECK(loss::mse_feature_loss(s, s).loss == 0.0);
  Tensor u(Shape{1, 4, 1, 1});
  CHECK(error_of([&] { loss::mse_feature_loss(s, u); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("kl divergence basics") {
  std::mt19937_64 gen(5);
  const auto p = oracle::random_distribution(4, 5, gen);
  const auto q = oracle::random_distribution(4, 5, gen);
  LogitsSequence P = log_of(p).array().exp().matrix();
  LogitsSequence Q = log_of(q).array().exp().matrix();
  CHECK(loss::kldiv_loss(P, P) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(loss::kldiv_loss(P, Q) > 0.0);
  CHECK(loss::kldiv_loss(P, Q) != doctest::Approx(loss::kldiv_loss(Q, P)));
  CHECK(loss::kldiv_loss(P, Q, loss::KlDirection::kTeacherFirst) ==
        doctest::Approx(loss::kldiv_loss(Q, P)));
  CHECK(loss::kldiv_from_log_probs(log_of(p), Q, loss::KlDirection::kStudentFirst, false).loss ==
        doctest::Approx(loss::kldiv_loss(P, Q)));
  LogitsSequence zero_q = Q;
  zero_q(0, 0) = 0.0;
  CHECK(std::isfinite(loss::kldiv_loss(P, zero_q)));
  CHECK(error_of([&] { loss::kldiv_loss(P, LogitsSequence::Ones(3, 5)); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("kl gradient matches finite differences in both directions") {
  std::mt19937_64 gen(6);
  const LogitsSequence lp = random_log_probs(3, 4, gen);
  const LogitsSequence q = random_log_probs(3, 4, gen).array().exp().matrix();
  for (auto dir : {loss::KlDirection::kStudentFirst, loss::KlDirection::kTeacherFirst}) {
    const auto r = loss::kldiv_from_log_probs(lp, q, dir, true);
    std::vector<double> flat(lp.data(), lp.data() + lp.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double numeric = oracle::central_difference(flat, i, 1e-6, [&] {
        LogitsSequence m = Eigen::Map<LogitsSequence>(flat.data(), lp.rows(), lp.cols());
        return loss::kldiv_from_log_probs(m, q, dir, false).loss;
      });
      CHECK(oracle::relative_error(r.grad.data()[i], numeric) < 1e-6);
    }
  }
}

TEST_CASE("hybrid total composes its parts") {
  std::mt19937_64 gen(2);
  std::vector<LogitsSequence> levels{random_log_probs(8, 3, gen), random_log_probs(8, 3, gen),
                                     random_log_probs(4, 3, gen)};
  const std::vector<int> label{1, 2};
  Tensor sf(Shape{8, 2, 2, 2}), tf(Shape{8, 2, 2, 2});
  Rng rng(1);
  for (double& v : sf.values()) v = rng.uniform();
  for (double& v : tf.values()) v = rng.uniform();
  const LogitsSequence tp = random_log_probs(4, 3, gen).array().exp().matrix();
  loss::HybridInputs in{&levels, label, &sf, &tf, &tp, 140.0, 120.0};
  const auto r = loss::hybrid_loss(in, false);
  double want = 0.0;
  for (const auto& l : levels) want += loss::ctc_loss(l, label, false).loss;
  want += 140.0 * loss::mse_feature_loss(sf, tf, false).loss;
  want += 120.0 * loss::kldiv_from_log_probs(levels.back(), tp, loss::KlDirection::kStudentFirst, false).loss;
  CHECK(r.breakdown.total == want);
  CHECK(r.breakdown.total == r.breakdown.recompute_total());

  loss::HybridInputs plain{&levels, label};
  CHECK(loss::hybrid_loss(plain, false).breakdown.total == loss::multilevel_ctc(levels, label, false).loss);
  loss::HybridInputs missing{&levels, label, &sf, nullptr, nullptr, 1.0, 0.0};
  CHECK(error_of([&] { loss::hybrid_loss(missing); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("hybrid gradient through a tiny student") {
  const auto cfg = test::tiny_config();
  arch::Network net(arch::build_student(cfg, 4), 12);
  oracle::HybridProblem p;
  Rng rng(3);
  p.video = Tensor(Shape{4, 3, 16, 16});
  for (double& v : p.video.values()) v = rng.uniform();
  p.label = {2};
  p.teacher_features = Tensor(Shape{4, 8, 2, 2});
  for (double& v : p.teacher_features.values()) v = rng.uniform();
  std::mt19937_64 gen(3);
  p.teacher_probs = random_log_probs(1, 3, gen).array().exp().matrix();
  p.alpha = cfg.alpha;
  p.beta = cfg.beta;
  const auto report = oracle::check_network_gradients(net, p, 4);
  INFO("worst " << report.worst << " at " << report.worst_name << " analytic " << report.worst_analytic
                << " numeric " << report.worst_numeric);
  CHECK(report.checked > 100);
  CHECK(report.worst < 1e-4);
}
