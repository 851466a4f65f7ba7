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

#pragma once

// Brute-force reference for small box QPs: enumerate every assignment of each
// coordinate to {free, lower, upper}, solve the reduced KKT system for the free
// block and keep the assignment that satisfies primal and dual feasibility.

#include <Eigen/Dense>

#include <optional>
#include <random>

namespace asuflex::testing {

inline std::optional<Eigen::VectorXd> enumerate_kkt(const Eigen::MatrixXd& h, const Eigen::VectorXd& f,
                                                    const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                                                    double feas_tol = 1e-9) {
  const int n = static_cast<int>(f.size());
  int patterns = 1;
  for (int i = 0; i < n; ++i) patterns *= 3;
  std::optional<Eigen::VectorXd> best;
  double best_obj = 0.0;
  for (int code = 0; code < patterns; ++code) {
    std::vector<int> state(static_cast<std::size_t>(n));
    int c = code;
    for (int i = 0; i < n; ++i, c /= 3) state[static_cast<std::size_t>(i)] = c % 3;  // 0 free, 1 lower, 2 upper

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 0) free_idx.push_back(i);
      if (s == 1) x[i] = lb[i];
      if (s == 2) x[i] = ub[i];
    }
    const int nf = static_cast<int>(free_idx.size());
    if (nf > 0) {
      Eigen::MatrixXd hff(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs[a] = -f[free_idx[a]];
        for (int i = 0; i < n; ++i) {
          if (state[static_cast<std::size_t>(i)] != 0) rhs[a] -= h(free_idx[a], i) * x[i];
        }
        for (int b = 0; b < nf; ++b) hff(a, b) = h(free_idx[a], free_idx[b]);
      }
      const Eigen::VectorXd xf = hff.ldlt().solve(rhs);
      for (int a = 0; a < nf; ++a) x[free_idx[a]] = xf[a];
    }
    const Eigen::VectorXd g = h * x + f;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 0) ok = x[i] >= lb[i] - feas_tol && x[i] <= ub[i] + feas_tol;
      if (s == 1) ok = g[i] >= -feas_tol;
      if (s == 2) ok = g[i] <= feas_tol;
    }
    if (!ok) continue;
    const double obj = 0.5 * x.dot(h * x) + f.dot(x);
    if (!best || obj < best_obj) {
      best = x;
      best_obj = obj;
    }
  }
  return best;
}

struct RandomBoxQp {
  Eigen::MatrixXd h;
  Eigen::VectorXd f, lb, ub;
};

/// SPD Hessian with eigenvalues in [0.1, 10], bounds straddling the
/// unconstrained optimum so that a mix of constraints is active.
inline RandomBoxQp random_box_qp(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = n01(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd eig(n);
  for (int i = 0; i < n; ++i) eig[i] = 0.1 + 9.9 * u(rng);
  RandomBoxQp p;
  p.h = q * eig.asDiagonal() * q.transpose();
  p.h = 0.5 * (p.h + p.h.transpose());
  p.f.resize(n);
  p.lb.resize(n);
  p.ub.resize(n);
  for (int i = 0; i < n; ++i) {
    p.f[i] = 3.0 * n01(rng);
    p.lb[i] = -1.0 - u(rng);
    p.ub[i] = 1.0 + u(rng);
  }
  return p;
}

}  // namespace asuflex::testing
