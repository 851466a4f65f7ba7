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

// Setpoint-tracking linear MPC on the identified deviation model.
//
// Condensed formulation over horizon N with stacked inputs U = [u_0 .. u_{N-1}]
// (deviations from u_ss):
//
//   Y = Psi x + Phi U,    y_k predicted for k = 1..N
//   J = sum_k |y_k + d - y_sp|^2_Q + sum_k |u_k - u_{k-1}|^2_R
//
// Q and R act on scaled variables: diag(q ./ output_scale.^2) and
// diag(r ./ input_scale.^2). Only input boxes enter the QP.

#include <Eigen/Dense>

#include <optional>

#include "asuflex/error.hpp"
#include "asuflex/plant.hpp"
#include "asuflex/qp.hpp"
#include "asuflex/sysid.hpp"

namespace asuflex {

struct MpcConfig {
  int horizon = 12;
  Eigen::VectorXd q;  // output tracking weights, >= 0
  Eigen::VectorXd r;  // move-suppression weights, > 0
  double bias_gain = 1.0;
  Eigen::VectorXd output_scale;  // empty: unit scaling
  Eigen::VectorXd input_scale;   // empty: unit scaling
  double qp_tol = 1e-8;
  int qp_max_iter = 5000;

  /// Defaults for the four controlled outputs (n_product, i_product, dt_irc,
  /// f_tank) and the four MVs, inputs scaled by their admissible range.
  static MpcConfig plant_default() {
    MpcConfig cfg;
    cfg.q = Eigen::Vector4d(10.0, 1.0, 1.0, 0.1);
    cfg.r = Eigen::Vector4d::Constant(0.1);
    cfg.output_scale = Eigen::Vector4d(5.0, 300.0, 0.75, 5.0);
    cfg.input_scale = MvBounds::range();
    return cfg;
  }

  void validate(int m, int p) const {
    if (horizon < 1) throw Error(ErrorCode::ConfigError, "mpc: horizon must be >= 1");
    if (q.size() != p || r.size() != m) throw Error(ErrorCode::DimensionMismatch, "mpc: weight dimensions do not match the model");
    if ((q.array() < 0.0).any()) throw Error(ErrorCode::ConfigError, "mpc: q must be >= 0");
    if ((r.array() <= 0.0).any()) throw Error(ErrorCode::ConfigError, "mpc: r must be strictly positive");
    if (bias_gain < 0.0 || bias_gain > 1.0) throw Error(ErrorCode::ConfigError, "mpc: bias_gain must lie in [0, 1]");
    if ((output_scale.size() != 0 && output_scale.size() != p) || (input_scale.size() != 0 && input_scale.size() != m)) {
      throw Error(ErrorCode::DimensionMismatch, "mpc: scale dimensions do not match the model");
    }
    if ((output_scale.array() <= 0.0).any() || (input_scale.array() <= 0.0).any()) {
      throw Error(ErrorCode::ConfigError, "mpc: scales must be positive");
    }
  }

  Eigen::VectorXd q_scaled() const {
    return output_scale.size() ? Eigen::VectorXd(q.array() / output_scale.array().square()) : q;
  }
  Eigen::VectorXd r_scaled() const {
    return input_scale.size() ? Eigen::VectorXd(r.array() / input_scale.array().square()) : r;
  }
};

/// Stacked prediction matrices: Y = psi * x0 + phi * U.
struct CondensedPrediction {
  Eigen::MatrixXd psi;
  Eigen::MatrixXd phi;

  static CondensedPrediction build(const LinearModel& model, int horizon) {
    const int n = model.n(), m = model.m(), p = model.p();
    CondensedPrediction cp;
    cp.psi = Eigen::MatrixXd::Zero(horizon * p, n);
    cp.phi = Eigen::MatrixXd::Zero(horizon * p, horizon * m);
    // markov[k] = C A^k B
    std::vector<Eigen::MatrixXd> markov;
    Eigen::MatrixXd a_pow = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < horizon; ++k) {
      markov.push_back(model.c * a_pow * model.b);
      a_pow = model.a * a_pow;
      cp.psi.block(k * p, 0, p, n) = model.c * a_pow;
    }
    for (int k = 0; k < horizon; ++k) {
      for (int i = 0; i <= k; ++i) cp.phi.block(k * p, i * m, p, m) = markov[static_cast<std::size_t>(k - i)];
    }
    return cp;
  }
};

/// Condensed QP for one controller step. All vectors are deviations from the
/// model operating point; lb/ub are absolute input bounds.
inline QpProblem build_qp(const LinearModel& model, const Eigen::VectorXd& x_hat, const Eigen::VectorXd& y_sp_dev,
                          const Eigen::VectorXd& d_hat, const Eigen::VectorXd& u_prev_dev, const MpcConfig& cfg,
                          const Eigen::VectorXd& u_lb, const Eigen::VectorXd& u_ub) {
  model.check_dimensions();
  const int n = model.n(), m = model.m(), p = model.p(), N = cfg.horizon;
  if (x_hat.size() != n || y_sp_dev.size() != p || d_hat.size() != p || u_prev_dev.size() != m || u_lb.size() != m ||
      u_ub.size() != m || cfg.q.size() != p || cfg.r.size() != m || N < 1) {
    throw Error(ErrorCode::DimensionMismatch, "build_qp: dimensions inconsistent with the model");
  }
  const CondensedPrediction cp = CondensedPrediction::build(model, N);
  const Eigen::VectorXd qbar = cfg.q_scaled().replicate(N, 1);
  const Eigen::VectorXd rbar = cfg.r_scaled().replicate(N, 1);

  // Move operator: (D U)_k = u_k - u_{k-1}; u_{-1} enters through e_prev.
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(N * m, N * m);
  for (int k = 1; k < N; ++k) d.block(k * m, (k - 1) * m, m, m) = -Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd e_prev = Eigen::VectorXd::Zero(N * m);
  e_prev.head(m) = u_prev_dev;

  const Eigen::VectorXd free_err = cp.psi * x_hat + (d_hat - y_sp_dev).replicate(N, 1);

  QpProblem qp;
  qp.h = 2.0 * (cp.phi.transpose() * qbar.asDiagonal() * cp.phi + d.transpose() * rbar.asDiagonal() * d);
  qp.h = 0.5 * (qp.h + qp.h.transpose());
  qp.f = 2.0 * (cp.phi.transpose() * (qbar.asDiagonal() * free_err) - d.transpose() * (rbar.asDiagonal() * e_prev));
  qp.lb = (u_lb - model.u_ss).replicate(N, 1);
  qp.ub = (u_ub - model.u_ss).replicate(N, 1);
  qp.horizon = N;
  qp.inputs = m;
  return qp;
}

struct LmpcOutput {
  Eigen::VectorXd u;  // absolute inputs applied
  QpSolution qp;
};

/// Receding-horizon controller with output-bias (offset-free) correction and
/// warm start from the shifted previous solution.
class LmpcController {
 public:
  LmpcController(LinearModel model, MpcConfig cfg, Eigen::VectorXd u_lb, Eigen::VectorXd u_ub)
      : model_(std::move(model)), cfg_(std::move(cfg)), u_lb_(std::move(u_lb)), u_ub_(std::move(u_ub)) {
    model_.validate();
    cfg_.validate(model_.m(), model_.p());
    if (u_lb_.size() != model_.m() || u_ub_.size() != model_.m()) {
      throw Error(ErrorCode::DimensionMismatch, "lmpc: bound dimensions do not match the model");
    }
    const QpProblem probe = build_qp(model_, Eigen::VectorXd::Zero(model_.n()), Eigen::VectorXd::Zero(model_.p()),
                                     Eigen::VectorXd::Zero(model_.p()), Eigen::VectorXd::Zero(model_.m()), cfg_, u_lb_, u_ub_);
    solver_.set_hessian(probe.h);
    reset();
  }

  /// Controller for the plant's four MVs with the plant's box bounds.
  static LmpcController for_plant(LinearModel model, MpcConfig cfg) {
    return LmpcController(std::move(model), std::move(cfg), MvBounds::lower(), MvBounds::upper());
  }

  void reset() {
    x_hat_ = Eigen::VectorXd::Zero(model_.n());
    d_hat_ = Eigen::VectorXd::Zero(model_.p());
    u_prev_ = Eigen::VectorXd::Zero(model_.m());
    warm_.reset();
  }

  /// One control step: bias update from the measurement, QP solve, first
  /// move applied (clamped to the bounds) and the model state advanced.
  LmpcOutput step(const Eigen::VectorXd& y_meas, const Eigen::VectorXd& y_sp) {
    if (y_meas.size() != model_.p() || y_sp.size() != model_.p()) {
      throw Error(ErrorCode::DimensionMismatch, "lmpc_step: output dimension mismatch");
    }
    const Eigen::VectorXd y_dev = y_meas - model_.y_ss;
    const Eigen::VectorXd predicted = model_.c * x_hat_ + d_hat_;
    d_hat_ += cfg_.bias_gain * (y_dev - predicted);

    const QpProblem qp = build_qp(model_, x_hat_, y_sp - model_.y_ss, d_hat_, u_prev_, cfg_, u_lb_, u_ub_);
    LmpcOutput out;
    out.qp = solver_.solve(qp.f, qp.lb, qp.ub, warm_, QpSettings{cfg_.qp_tol, cfg_.qp_max_iter});

    const int m = model_.m(), N = cfg_.horizon;
    Eigen::VectorXd shifted(N * m);
    shifted.head((N - 1) * m) = out.qp.x.tail((N - 1) * m);
    shifted.tail(m) = out.qp.x.tail(m);
    warm_ = shifted;

    out.u = (model_.u_ss + out.qp.x.head(m)).cwiseMax(u_lb_).cwiseMin(u_ub_);
    const Eigen::VectorXd u_dev = out.u - model_.u_ss;
    x_hat_ = model_.a * x_hat_ + model_.b * u_dev;
    u_prev_ = u_dev;
    return out;
  }

  const LinearModel& model() const { return model_; }
  const MpcConfig& config() const { return cfg_; }
  const Eigen::VectorXd& bias() const { return d_hat_; }

 private:
  LinearModel model_;
  MpcConfig cfg_;
  Eigen::VectorXd u_lb_, u_ub_;
  BoxQpSolver solver_;
  Eigen::VectorXd x_hat_, d_hat_, u_prev_;
  std::optional<Eigen::VectorXd> warm_;
};

}  // namespace asuflex
