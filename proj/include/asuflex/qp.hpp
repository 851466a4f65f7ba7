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

// Box-constrained convex QP
//
//   minimize 0.5 x'Hx + f'x   subject to  lb <= x <= ub
//
// solved by monotone FISTA (accelerated projected gradient) with gradient
// restart. The step is 1/L with L the largest eigenvalue of H, which is
// computed once per Hessian so receding-horizon use only pays for the
// iterations.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "asuflex/error.hpp"

namespace asuflex {

struct QpProblem {
  Eigen::MatrixXd h;
  Eigen::VectorXd f;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
  int horizon = 1;
  int inputs = 0;

  int size() const { return static_cast<int>(f.size()); }

  void validate() const {
    const auto n = f.size();
    if (h.rows() != n || h.cols() != n || lb.size() != n || ub.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "qp: inconsistent dimensions");
    }
    if ((lb.array() > ub.array()).any()) throw Error(ErrorCode::InvalidArgument, "qp: lb > ub");
  }

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(h * x) + f.dot(x); }
};

enum class QpStatus { Solved, MaxIterReached };

struct QpSolution {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;  // ||x - P(x - grad)||_inf
  double objective = 0.0;
  QpStatus status = QpStatus::Solved;
};

struct QpSettings {
  double tol = 1e-9;
  int max_iter = 20000;
};

inline Eigen::VectorXd project_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub) {
  return x.cwiseMax(lb).cwiseMin(ub);
}

/// Projected-gradient solver bound to one Hessian.
class BoxQpSolver {
 public:
  BoxQpSolver() = default;

  explicit BoxQpSolver(const Eigen::MatrixXd& h) { set_hessian(h); }

  /// Also computes a Jacobi scaling D = diag(H)^-1/2; iterations run on
  /// D H D, whose box stays a box, and residuals are reported unscaled.
  void set_hessian(const Eigen::MatrixXd& h) {
    if (h.rows() != h.cols()) throw Error(ErrorCode::DimensionMismatch, "qp: Hessian must be square");
    if (!h.isApprox(h.transpose(), 1e-10)) throw Error(ErrorCode::InvalidArgument, "qp: Hessian must be symmetric");
    h_ = h;
    scale_ = Eigen::VectorXd::Ones(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      if (h(i, i) > 0.0) scale_[i] = 1.0 / std::sqrt(h(i, i));
    }
    hs_ = scale_.asDiagonal() * h * scale_.asDiagonal();
    if (h.rows() == 0) {
      lipschitz_ = 1.0;
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-10 * std::max(1.0, std::abs(lmax))) {
      throw Error(ErrorCode::NonConvex, "qp: Hessian has a negative curvature direction");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ess(hs_, Eigen::EigenvaluesOnly);
    const double ls = ess.eigenvalues().maxCoeff();
    lipschitz_ = ls > 0.0 ? ls : 1.0;
  }

  const Eigen::MatrixXd& hessian() const { return h_; }
  double lipschitz() const { return lipschitz_; }

  /// `objective_trace`, when given, receives the objective of every accepted iterate.
  QpSolution solve(const Eigen::VectorXd& f, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                   const std::optional<Eigen::VectorXd>& warm_start = std::nullopt, const QpSettings& settings = {},
                   std::vector<double>* objective_trace = nullptr) const {
    const auto n = h_.rows();
    if (f.size() != n || lb.size() != n || ub.size() != n) throw Error(ErrorCode::DimensionMismatch, "qp: inconsistent dimensions");
    if ((lb.array() > ub.array()).any()) throw Error(ErrorCode::InvalidArgument, "qp: lb > ub");

    // Scaled problem: x = D z, so min 0.5 z'(DHD)z + (Df)'z over lb/D <= z <= ub/D.
    const Eigen::VectorXd& d = scale_;
    const Eigen::VectorXd fs = d.cwiseProduct(f);
    const Eigen::VectorXd lbs = lb.cwiseQuotient(d), ubs = ub.cwiseQuotient(d);
    const auto residual = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& hz) {
      const Eigen::VectorXd x = d.cwiseProduct(z);
      const Eigen::VectorXd grad = (hz + fs).cwiseQuotient(d);
      return (x - project_box(x - grad, lb, ub)).lpNorm<Eigen::Infinity>();
    };

    Eigen::VectorXd z = n == 0 ? Eigen::VectorXd() : project_box(
        (warm_start && warm_start->size() == n ? *warm_start : Eigen::VectorXd::Zero(n)).cwiseQuotient(d), lbs, ubs);
    Eigen::VectorXd hz = hs_ * z;
    double fz = 0.5 * z.dot(hz) + fs.dot(z);
    double res = n == 0 ? 0.0 : residual(z, hz);
    if (objective_trace) objective_trace->push_back(fz);

    QpSolution sol;
    if (n == 0 || res <= settings.tol) {
      sol.x = project_box(d.cwiseProduct(z), lb, ub);
      sol.residual = res;
      sol.objective = fz;
      return sol;
    }

    const double step = 1.0 / lipschitz_;
    Eigen::VectorXd y = z;
    double t = 1.0;
    int it = 0;
    while (it < settings.max_iter) {
      ++it;
      const Eigen::VectorXd w = project_box(y - step * (hs_ * y + fs), lbs, ubs);
      const Eigen::VectorXd hw = hs_ * w;
      // Objective change evaluated in difference form to avoid cancellation
      // near the optimum: e'(Hz + f) + 0.5 e'H e with e = w - z.
      const Eigen::VectorXd e = w - z;
      const double delta = e.dot(hz + fs) + 0.5 * e.dot(hw - hz);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      if (delta <= 0.0) {
        const Eigen::VectorXd z_prev = z;
        z = w;
        hz = hw;
        fz += delta;
        y = z + ((t - 1.0) / t_next) * (z - z_prev);
        t = t_next;
        if (objective_trace) objective_trace->push_back(fz);
        res = residual(z, hz);
        if (res <= settings.tol) break;
      } else {
        // Objective went up: restart the momentum from the best iterate.
        y = z;
        t = 1.0;
      }
    }
    sol.x = project_box(d.cwiseProduct(z), lb, ub);
    sol.iterations = it;
    sol.residual = res;
    sol.objective = 0.5 * z.dot(hz) + fs.dot(z);
    sol.status = res <= settings.tol ? QpStatus::Solved : QpStatus::MaxIterReached;
    return sol;
  }

 private:
  Eigen::MatrixXd h_;
  Eigen::MatrixXd hs_;
  Eigen::VectorXd scale_;
  double lipschitz_ = 1.0;
};

inline QpSolution solve_qp(const QpProblem& qp, double tol = 1e-9, int max_iter = 20000,
                           const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
  qp.validate();
  const BoxQpSolver solver(qp.h);
  return solver.solve(qp.f, qp.lb, qp.ub, warm_start, QpSettings{tol, max_iter});
}

}  // namespace asuflex
