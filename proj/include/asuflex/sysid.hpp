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

// Step-response identification of a discrete linear model of the surrogate.
//
// Every input/output channel gets its own low-order ARX fit on deviation data;
// the channels are stacked into a block-diagonal state-space realization whose
// output matrix sums the channel states feeding each output.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "asuflex/error.hpp"
#include "asuflex/plant.hpp"

namespace asuflex {

inline constexpr int kNumControlledOutputs = 4;  // n_product, i_product, dt_irc, f_tank

struct LinearModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  Eigen::VectorXd x_ss;
  Eigen::VectorXd u_ss;
  Eigen::VectorXd y_ss;
  double dt = 900.0;
  int order = 1;
  std::vector<std::uint64_t> provenance_seeds;

  int n() const { return static_cast<int>(a.rows()); }
  int m() const { return static_cast<int>(b.cols()); }
  int p() const { return static_cast<int>(c.rows()); }

  double spectral_radius() const {
    if (n() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  void check_dimensions() const {
    const bool ok = a.rows() == a.cols() && b.rows() == a.rows() && c.cols() == a.rows() &&
                    x_ss.size() == a.rows() && u_ss.size() == b.cols() && y_ss.size() == c.rows() && dt > 0.0;
    if (!ok) throw Error(ErrorCode::DimensionMismatch, "linear model: inconsistent dimensions");
  }

  void validate() const {
    check_dimensions();
    if (spectral_radius() >= 1.0) throw Error(ErrorCode::Unstable, "linear model: spectral radius >= 1");
  }

  bool operator==(const LinearModel& o) const {
    return a == o.a && b == o.b && c == o.c && x_ss == o.x_ss && u_ss == o.u_ss && y_ss == o.y_ss && dt == o.dt &&
           order == o.order && provenance_seeds == o.provenance_seeds;
  }
};

/// DC gain C (I - A)^-1 B.
inline Eigen::MatrixXd steady_state_gain(const LinearModel& model) {
  const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(model.n(), model.n());
  return model.c * (i - model.a).partialPivLu().solve(model.b);
}

/// Input/output deviation trajectories of one experiment. u[k] is held over
/// sample interval k; y[k] is the output deviation at sample k, so y has one
/// more entry than u and y[0] is the pre-step deviation.
struct ResponseRecord {
  int mv_index = 0;
  double dt = 900.0;
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> y;
  Eigen::VectorXd u_ss;
  Eigen::VectorXd y_ss;
};

inline Eigen::Vector4d controlled_outputs(const PlantState& s) { return {s.n_product, s.i_product, s.dt_irc, s.f_tank}; }

struct SurrogateSetup {
  PlantParams params{};
  double n_demand = 20.0;
  double dt = 900.0;
  double measurement_noise = 0.0;  // std-dev as a fraction of each output's nominal magnitude
};

/// Open-loop response of the surrogate to a sequence of MV deviations about
/// the nominal point, returned as output deviations at samples 1..K.
inline std::vector<Eigen::VectorXd> surrogate_response(const SurrogateSetup& setup,
                                                       const std::vector<Eigen::VectorXd>& du) {
  PlantState s = nominal_state(setup.params, setup.n_demand);
  const Eigen::Vector4d y0 = controlled_outputs(s);
  const MvVector u0 = setup.params.nominal.as_vector();
  std::vector<Eigen::VectorXd> out;
  out.reserve(du.size());
  for (const auto& d : du) {
    if (d.size() != kNumMvs) throw Error(ErrorCode::DimensionMismatch, "surrogate_response: input must have 4 entries");
    const ManipulatedVars mv = MvBounds::clamp(ManipulatedVars::from_vector(u0 + d));
    s = step(s, mv, setup.n_demand, setup.dt, setup.params).state;
    out.emplace_back(controlled_outputs(s) - y0);
  }
  return out;
}

/// Step the given MV by amplitude * (MV range) from the nominal steady state
/// and record the sampled deviations for `duration` seconds.
inline ResponseRecord step_experiment(int mv_index, double amplitude, double duration, std::uint64_t seed,
                                      const SurrogateSetup& setup = {}) {
  if (mv_index < 0 || mv_index >= kNumMvs) throw Error(ErrorCode::MVIndexOutOfRange, "step_experiment: mv index must be 0..3");
  if (!(amplitude > 0.0 && amplitude <= 0.5)) throw Error(ErrorCode::InvalidArgument, "step_experiment: amplitude must lie in (0, 0.5]");
  const int samples = std::max(1, static_cast<int>(std::lround(duration / setup.dt)));

  ResponseRecord rec;
  rec.mv_index = mv_index;
  rec.dt = setup.dt;
  rec.seed = seed;
  rec.u_ss = setup.params.nominal.as_vector();
  rec.y_ss = controlled_outputs(nominal_state(setup.params, setup.n_demand));

  Eigen::VectorXd du = Eigen::VectorXd::Zero(kNumMvs);
  du[mv_index] = amplitude * MvBounds::range()[mv_index];
  rec.u.assign(static_cast<std::size_t>(samples), du);
  rec.y.push_back(Eigen::VectorXd::Zero(kNumControlledOutputs));
  for (auto& y : surrogate_response(setup, rec.u)) rec.y.push_back(std::move(y));

  if (setup.measurement_noise > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t k = 1; k < rec.y.size(); ++k) {
      for (int i = 0; i < kNumControlledOutputs; ++i) {
        rec.y[k][i] += setup.measurement_noise * std::max(std::abs(rec.y_ss[i]), 1.0) * n01(rng);
      }
    }
  }
  return rec;
}

/// One fitted SISO channel: y+ = sum_i a_i y_{-i} + sum_i b_i u_{-i}.
struct ChannelFit {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  bool zero = false;

  double gain() const {
    const double den = 1.0 - a.sum();
    return zero ? 0.0 : b.sum() / den;
  }
  double max_pole_magnitude() const {
    if (a.size() == 1) return std::abs(a[0]);
    // z^2 - a1 z - a2
    const std::complex<double> disc = std::sqrt(std::complex<double>(a[0] * a[0] + 4.0 * a[1], 0.0));
    return std::max(std::abs((a[0] + disc) / 2.0), std::abs((a[0] - disc) / 2.0));
  }
};

inline ChannelFit fit_channel(const std::vector<const ResponseRecord*>& records, int input, int output, int order) {
  int rows = 0;
  double peak = 0.0;
  for (const auto* r : records) {
    rows += static_cast<int>(r->u.size());
    for (const auto& y : r->y) peak = std::max(peak, std::abs(y[output]));
  }
  ChannelFit fit;
  fit.a = Eigen::VectorXd::Zero(order);
  fit.b = Eigen::VectorXd::Zero(order);
  if (peak <= 1e-12) {
    fit.zero = true;
    return fit;
  }

  Eigen::MatrixXd phi(rows, 2 * order);
  Eigen::VectorXd target(rows);
  int row = 0;
  for (const auto* r : records) {
    auto y_at = [&](int k) { return k < 0 ? 0.0 : r->y[static_cast<std::size_t>(k)][output]; };
    auto u_at = [&](int k) { return k < 0 ? 0.0 : r->u[static_cast<std::size_t>(k)][input]; };
    for (int k = 0; k < static_cast<int>(r->u.size()); ++k, ++row) {
      for (int i = 0; i < order; ++i) {
        phi(row, i) = y_at(k - i);
        phi(row, order + i) = u_at(k - i);
      }
      target[row] = y_at(k + 1);
    }
  }
  // Column scaling keeps the rank test meaningful when y and u differ by
  // orders of magnitude (ppm against fractions).
  Eigen::VectorXd col_scale = phi.colwise().norm().transpose();
  for (int j = 0; j < col_scale.size(); ++j) {
    if (col_scale[j] == 0.0) throw Error(ErrorCode::RankDeficient, "fit_linear_model: regressor column is identically zero");
  }
  const Eigen::MatrixXd phi_s = phi * col_scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi_s);
  qr.setThreshold(1e-9);
  if (qr.rank() < phi_s.cols()) {
    throw Error(ErrorCode::RankDeficient, "fit_linear_model: singular regression for input " + std::to_string(input) +
                                              " -> output " + std::to_string(output));
  }
  const Eigen::VectorXd theta = qr.solve(target).cwiseQuotient(col_scale);
  fit.a = theta.head(order);
  fit.b = theta.tail(order);
  if (fit.max_pole_magnitude() >= 1.0) {
    throw Error(ErrorCode::Unstable, "fit_linear_model: unstable pole for input " + std::to_string(input) +
                                         " -> output " + std::to_string(output));
  }
  return fit;
}

/// Fit every input/output channel and assemble the block-diagonal realization.
/// Channel (output i, input j) owns states [order*(i*m + j), order*(i*m + j + 1)).
inline LinearModel fit_linear_model(const std::vector<ResponseRecord>& records, int order_per_channel) {
  if (order_per_channel != 1 && order_per_channel != 2) {
    throw Error(ErrorCode::InvalidArgument, "fit_linear_model: order must be 1 or 2");
  }
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "fit_linear_model: no records");
  const int m = static_cast<int>(records.front().u_ss.size());
  const int p = static_cast<int>(records.front().y_ss.size());
  for (const auto& r : records) {
    const bool ok = r.u_ss.size() == m && r.y_ss.size() == p && r.y.size() == r.u.size() + 1 &&
                    std::all_of(r.u.begin(), r.u.end(), [&](const auto& v) { return v.size() == m; }) &&
                    std::all_of(r.y.begin(), r.y.end(), [&](const auto& v) { return v.size() == p; });
    if (!ok) throw Error(ErrorCode::DimensionMismatch, "fit_linear_model: inconsistent record dimensions");
  }

  const int ord = order_per_channel;
  const int n = ord * m * p;
  LinearModel model;
  model.a = Eigen::MatrixXd::Zero(n, n);
  model.b = Eigen::MatrixXd::Zero(n, m);
  model.c = Eigen::MatrixXd::Zero(p, n);
  model.x_ss = Eigen::VectorXd::Zero(n);
  model.u_ss = records.front().u_ss;
  model.y_ss = records.front().y_ss;
  model.dt = records.front().dt;
  model.order = ord;

  for (int j = 0; j < m; ++j) {
    std::vector<const ResponseRecord*> for_input;
    for (const auto& r : records) {
      if (r.mv_index == j) for_input.push_back(&r);
    }
    if (for_input.empty()) {
      throw Error(ErrorCode::InvalidArgument, "fit_linear_model: no experiment for input " + std::to_string(j));
    }
    for (const auto* r : for_input) model.provenance_seeds.push_back(r->seed);
    for (int i = 0; i < p; ++i) {
      const ChannelFit fit = fit_channel(for_input, j, i, ord);
      const int s = ord * (i * m + j);
      if (ord == 1) {
        model.a(s, s) = fit.a[0];
        model.b(s, j) = fit.b[0];
      } else {
        model.a(s, s) = fit.a[0];
        model.a(s, s + 1) = 1.0;
        model.a(s + 1, s) = fit.a[1];
        model.b(s, j) = fit.b[0];
        model.b(s + 1, j) = fit.b[1];
      }
      model.c(i, s) = 1.0;
    }
  }
  return model;
}

/// Simulate the model from x = x_ss under input deviations du; returns output
/// deviations at samples 1..K.
inline std::vector<Eigen::VectorXd> simulate_model(const LinearModel& model, const std::vector<Eigen::VectorXd>& du) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(model.n());
  std::vector<Eigen::VectorXd> out;
  out.reserve(du.size());
  for (const auto& u : du) {
    x = model.a * x + model.b * u;
    out.emplace_back(model.c * x);
  }
  return out;
}

struct FitReport {
  Eigen::VectorXd nrmse;  // per output: rms(model - plant) / rms(plant deviation)
  int gate_output = 0;
  double threshold = 0.35;
  bool pass = true;
};

/// Normalized RMS error between two deviation trajectories. A zero reference
/// gives 0 when the candidate also vanishes, +inf otherwise.
inline double nrmse(const std::vector<double>& reference, const std::vector<double>& candidate) {
  double err = 0.0, ref = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    err += (candidate[k] - reference[k]) * (candidate[k] - reference[k]);
    ref += reference[k] * reference[k];
  }
  if (ref == 0.0) return err <= 1e-30 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(err / ref);
}

/// Compare model and plant on a probe sequence of input deviations.
/// `plant_response` maps the probe to plant output deviations at samples 1..K.
template <typename PlantResponse>
FitReport validate_model(const LinearModel& model, PlantResponse&& plant_response,
                         const std::vector<Eigen::VectorXd>& probe, int gate_output = 0, double threshold = 0.35) {
  const std::vector<Eigen::VectorXd> y_plant = plant_response(probe);
  const std::vector<Eigen::VectorXd> y_model = simulate_model(model, probe);
  if (y_plant.size() != y_model.size()) throw Error(ErrorCode::DimensionMismatch, "validate_model: response length mismatch");
  FitReport report;
  report.gate_output = gate_output;
  report.threshold = threshold;
  report.nrmse = Eigen::VectorXd::Zero(model.p());
  for (int i = 0; i < model.p(); ++i) {
    std::vector<double> ref, cand;
    for (std::size_t k = 0; k < y_plant.size(); ++k) {
      ref.push_back(y_plant[k][i]);
      cand.push_back(y_model[k][i]);
    }
    report.nrmse[i] = nrmse(ref, cand);
  }
  report.pass = report.nrmse[gate_output] <= threshold;
  return report;
}

/// Deterministic multistep probe: every `hold` samples each MV jumps to one of
/// {-amplitude, 0, +amplitude} times its range.
inline std::vector<Eigen::VectorXd> multistep_probe(std::uint64_t seed, int samples, int hold = 6, double amplitude = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(-1, 1);
  std::vector<Eigen::VectorXd> probe;
  Eigen::VectorXd current = Eigen::VectorXd::Zero(kNumMvs);
  for (int k = 0; k < samples; ++k) {
    if (k % hold == 0) {
      for (int j = 0; j < kNumMvs; ++j) current[j] = level(rng) * amplitude * MvBounds::range()[j];
    }
    probe.push_back(current);
  }
  return probe;
}

struct SysidConfig {
  double amplitude = 0.1;
  double duration = 6.0 * 3600.0;
  int order = 1;
  std::uint64_t seed = 7;
  int validation_samples = 96;
  double nrmse_threshold = 0.35;
  SurrogateSetup setup{};
};

struct SysidResult {
  LinearModel model;
  FitReport report;
  std::vector<ResponseRecord> records;
};

/// Full pipeline: one step test per MV, channel fits, multistep validation.
inline SysidResult identify_surrogate(const SysidConfig& cfg) {
  SysidResult result;
  for (int j = 0; j < kNumMvs; ++j) {
    result.records.push_back(step_experiment(j, cfg.amplitude, cfg.duration, cfg.seed + static_cast<std::uint64_t>(j), cfg.setup));
  }
  result.model = fit_linear_model(result.records, cfg.order);
  result.model.dt = cfg.setup.dt;
  result.model.validate();
  const auto probe = multistep_probe(cfg.seed + 100, cfg.validation_samples, 6, cfg.amplitude);
  result.report = validate_model(
      result.model, [&](const auto& du) { return surrogate_response(cfg.setup, du); }, probe, 0, cfg.nrmse_threshold);
  return result;
}

}  // namespace asuflex
