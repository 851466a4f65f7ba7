/*
 * Copyright 2026 The asuflex Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "asuflex/qp.hpp"
#include "qp_oracle.hpp"

namespace asuflex {
namespace {

QpProblem diag_problem(double f0, double f1) {
  QpProblem qp;
  qp.h = Eigen::Matrix2d{{2.0, 0.0}, {0.0, 2.0}};
  qp.f = Eigen::Vector2d(f0, f1);
  qp.lb = Eigen::Vector2d::Zero();
  qp.ub = Eigen::Vector2d::Ones();
  qp.inputs = 2;
  return qp;
}

TEST(SolveQp, ClippedSeparableOptimum) {
  const QpSolution s = solve_qp(diag_problem(-2.0, -4.0), 1e-12);
  EXPECT_EQ(s.status, QpStatus::Solved);
  EXPECT_NEAR(s.x[0], 1.0, 1e-9);
  EXPECT_NEAR(s.x[1], 1.0, 1e-9);
}

TEST(SolveQp, InteriorOptimum) {
  const QpSolution s = solve_qp(diag_problem(-1.0, -1.0), 1e-12);
  EXPECT_NEAR(s.x[0], 0.5, 1e-9);
  EXPECT_NEAR(s.x[1], 0.5, 1e-9);
  EXPECT_LE(s.residual, 1e-12);
}

TEST(SolveQp, MatchesKktEnumerationOn8Dims) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = testing::random_box_qp(rng, 8);
    QpProblem qp{p.h, p.f, p.lb, p.ub, 1, 8};
    const QpSolution s = solve_qp(qp, 1e-11, 100000);
    const auto ref = testing::enumerate_kkt(p.h, p.f, p.lb, p.ub);
    ASSERT_TRUE(ref.has_value());
    EXPECT_LT((s.x - *ref).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LE(s.residual, 1e-11);
  }
}

TEST(SolveQp, ObjectiveNeverIncreases) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testing::random_box_qp(rng, 6);
    const BoxQpSolver solver(p.h);
    std::vector<double> trace;
    solver.solve(p.f, p.lb, p.ub, std::nullopt, QpSettings{1e-10, 10000}, &trace);
    for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1]);
  }
}

TEST(SolveQp, MaxIterReturnsFlaggedIterate) {
  std::mt19937_64 rng(1);
  const auto p = testing::random_box_qp(rng, 8);
  const QpSolution s = solve_qp(QpProblem{p.h, p.f, p.lb, p.ub, 1, 8}, 1e-14, 2);
  EXPECT_EQ(s.status, QpStatus::MaxIterReached);
  EXPECT_EQ(s.iterations, 2);
  EXPECT_TRUE((s.x.array() >= p.lb.array()).all() && (s.x.array() <= p.ub.array()).all());
}

TEST(SolveQp, WarmStartAtOptimumTerminatesImmediately) {
  const QpSolution cold = solve_qp(diag_problem(-1.0, -3.0), 1e-12);
  const QpSolution warm = solve_qp(diag_problem(-1.0, -3.0), 1e-12, 100, cold.x);
  EXPECT_EQ(warm.iterations, 0);
  EXPECT_EQ(warm.x, cold.x);
}

TEST(SolveQp, NegativeCurvatureRejected) {
  QpProblem qp = diag_problem(0.0, 0.0);
  qp.h(1, 1) = -1.0;
  try {
    solve_qp(qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConvex);
  }
}

TEST(SolveQp, DimensionAndBoundChecks) {
  QpProblem qp = diag_problem(0.0, 0.0);
  qp.lb = Eigen::Vector3d::Zero();
  EXPECT_THROW(solve_qp(qp), Error);
  qp = diag_problem(0.0, 0.0);
  qp.lb[0] = 2.0;
  EXPECT_THROW(solve_qp(qp), Error);
}

TEST(SolveQp, Deterministic) {
  std::mt19937_64 rng(99);
  const auto p = testing::random_box_qp(rng, 7);
  const QpProblem qp{p.h, p.f, p.lb, p.ub, 1, 7};
  const QpSolution a = solve_qp(qp);
  const QpSolution b = solve_qp(qp);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.iterations, b.iterations);
}

}  // namespace
}  // namespace asuflex
