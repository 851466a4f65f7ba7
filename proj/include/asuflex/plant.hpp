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

// Reduced-order surrogate of a single-column nitrogen air separation unit with
// a liquid product storage tank.
//
// Three first-order lags carry the column dynamics (production rate, product
// impurity, IRC temperature difference); the tank holdup integrates the
// liquefier/evaporator balance. The liquefier split is never commanded: it is
// recomputed at every RK4 stage so that delivered product equals demand.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "asuflex/error.hpp"

namespace asuflex {

inline constexpr int kNumMvs = 4;
inline constexpr int kForecastHours = 12;
inline constexpr int kObservationDim = 4 + kForecastHours + 1;
inline constexpr double kTankTarget = 1728000.0;  // mol, terminal mid-level

using Observation = Eigen::Matrix<double, kObservationDim, 1>;
using MvVector = Eigen::Matrix<double, kNumMvs, 1>;

struct ManipulatedVars {
  double n_mac = 40.0;     // mol/s
  double xi_tur = 0.05;    // -
  double xi_top = 0.525;   // -
  double f_drain = 1.0;    // mol/s

  MvVector as_vector() const { return {n_mac, xi_tur, xi_top, f_drain}; }
  static ManipulatedVars from_vector(const MvVector& v) { return {v[0], v[1], v[2], v[3]}; }

  bool operator==(const ManipulatedVars&) const = default;
};

/// Box bounds of the commanded manipulated variables.
struct MvBounds {
  static MvVector lower() { return {30.0, 0.0, 0.51, 0.0}; }
  static MvVector upper() { return {50.0, 0.1, 0.54, 2.0}; }
  static MvVector midpoint() { return 0.5 * (lower() + upper()); }
  static MvVector range() { return upper() - lower(); }

  static bool contains(const ManipulatedVars& mv) {
    const MvVector v = mv.as_vector();
    return (v.array() >= lower().array()).all() && (v.array() <= upper().array()).all();
  }
  static ManipulatedVars clamp(const ManipulatedVars& mv) {
    return ManipulatedVars::from_vector(mv.as_vector().cwiseMax(lower()).cwiseMin(upper()));
  }
};

struct PlantState {
  double i_product = 0.0;   // ppm
  double dt_irc = 0.0;      // K
  double n_tank = 0.0;      // mol
  double f_tank = 0.0;      // mol/s
  double n_product = 0.0;   // mol/s
  double lag_prod = 0.0;    // mol/s
  double lag_purity = 0.0;  // ppm
  double lag_irc = 0.0;     // K
  double t_sim = 0.0;       // s

  bool operator==(const PlantState&) const = default;

  bool finite() const {
    for (double v : {i_product, dt_irc, n_tank, f_tank, n_product, lag_prod, lag_purity, lag_irc, t_sim}) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
  bool valid() const {
    return finite() && n_tank >= 0.0 && f_tank >= 0.0 && n_product >= 0.0 && i_product >= 0.0;
  }
};

struct PowerBreakdown {
  double p_comp = 0.0;  // MW
  double p_liq = 0.0;   // MW
  double p_tur = 0.0;   // MW

  double net() const { return p_comp + p_liq - p_tur; }
};

/// Calibration constants of the surrogate. Defaults put the nominal point
/// (n_mac=40, xi_tur=0.05, xi_top=0.525, f_drain=1) at 24 mol/s production,
/// 900 ppm impurity, 3.5 K IRC difference and 0.30 MW net power.
struct PlantParams {
  double tau_prod = 1200.0;    // s
  double tau_purity = 1800.0;  // s
  double tau_irc = 900.0;      // s
  double max_substep = 60.0;   // s

  ManipulatedVars nominal{};

  // n_product_ss = n_mac * (yield0 + yield_top*(xi_top-xi_top0) + yield_tur*(xi_tur-xi_tur0))
  //                - drain_loss*(f_drain-f_drain0)
  double yield0 = 0.6;
  double yield_top = -2.0;
  double yield_tur = -1.0;
  double drain_loss = 1.0;

  // i_ss = impurity0 * exp(impurity_load*(n_mac-n_mac0)/n_mac0 - impurity_top*(xi_top-xi_top0)/0.015)
  double impurity0 = 900.0;
  double impurity_load = 2.4;
  double impurity_top = 0.5;

  // dT_ss = irc0 + irc_drain*(f_drain-f_drain0) - irc_tur*(xi_tur-xi_tur0)/0.05
  //         + irc_load*(n_mac-n_mac0)/n_mac0
  double irc0 = 3.5;
  double irc_drain = 1.2;
  double irc_tur = 1.0;
  double irc_load = 1.0;

  double k_comp = 0.008;  // MW per mol/s of feed air
  double k_liq = 0.005;   // MW per mol/s liquefied
  double k_tur = 0.02;    // MW per mol/s through the turbine

  double reset_tank_jitter = 0.0;  // fractional uniform jitter on initial holdup
};

struct SteadyOutputs {
  double n_product;
  double i_product;
  double dt_irc;
};

inline double yield_fraction(const ManipulatedVars& mv, const PlantParams& p) {
  return p.yield0 + p.yield_top * (mv.xi_top - p.nominal.xi_top) + p.yield_tur * (mv.xi_tur - p.nominal.xi_tur);
}

/// Steady-state targets the three lags relax toward under constant inputs.
inline SteadyOutputs steady_outputs(const ManipulatedVars& mv, const PlantParams& p) {
  const auto& nom = p.nominal;
  const double prod = mv.n_mac * yield_fraction(mv, p) - p.drain_loss * (mv.f_drain - nom.f_drain);
  const double imp = p.impurity0 * std::exp(p.impurity_load * (mv.n_mac - nom.n_mac) / nom.n_mac -
                                            p.impurity_top * (mv.xi_top - nom.xi_top) / 0.015);
  const double irc = p.irc0 + p.irc_drain * (mv.f_drain - nom.f_drain) -
                     p.irc_tur * (mv.xi_tur - nom.xi_tur) / 0.05 + p.irc_load * (mv.n_mac - nom.n_mac) / nom.n_mac;
  return {std::max(prod, 0.0), imp, irc};
}

/// Fraction of product routed to the liquefier so that the gaseous remainder
/// never exceeds demand.
inline double liq_split(double n_product, double n_demand) {
  if (n_product > n_demand && n_product > 0.0) {
    return std::clamp(1.0 - n_demand / n_product, 0.0, 1.0);
  }
  return 0.0;
}

inline double evaporation(double n_product, double n_demand) {
  const double xi = liq_split(n_product, n_demand);
  return std::max(0.0, n_demand - (1.0 - xi) * n_product);
}

enum class StepStatus { Ok, TankEmpty, NonFinite };

/// Per-step bookkeeping used to audit the mass balance.
struct StepAudit {
  double tank_net_inflow = 0.0;     // sum of (f_tank - evap) * dt_sub over substeps, mol
  double max_delivery_error = 0.0;  // max |delivered - demand| over all RK4 stages, mol/s
  int substeps = 0;
};

struct StepResult {
  PlantState state;
  StepStatus status = StepStatus::Ok;
  StepAudit audit;
};

namespace detail {

using PlantOdeState = Eigen::Vector4d;  // lag_prod, lag_purity, lag_irc, n_tank

struct StageFlows {
  double f_tank;
  double evap;
  double delivered;
};

inline StageFlows stage_flows(double n_product, double n_demand) {
  const double prod = std::max(n_product, 0.0);
  const double xi = liq_split(prod, n_demand);
  const double evap = std::max(0.0, n_demand - (1.0 - xi) * prod);
  return {xi * prod, evap, (1.0 - xi) * prod + evap};
}

}  // namespace detail

/// Advance the plant by dt seconds under constant manipulated variables using
/// fixed-step RK4 with ceil(dt / max_substep) equal substeps.
inline StepResult step(const PlantState& state, const ManipulatedVars& mv, double n_demand, double dt,
                       const PlantParams& p = {}) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "step: dt must be positive");
  using detail::PlantOdeState;

  const SteadyOutputs target = steady_outputs(mv, p);
  const int n_sub = std::max(1, static_cast<int>(std::ceil(dt / p.max_substep - 1e-12)));
  const double h = dt / n_sub;

  StepResult out;
  out.audit.substeps = n_sub;

  auto rhs = [&](const PlantOdeState& y, detail::StageFlows& flows) {
    flows = detail::stage_flows(y[0], n_demand);
    out.audit.max_delivery_error = std::max(out.audit.max_delivery_error, std::abs(flows.delivered - n_demand));
    PlantOdeState dy;
    dy[0] = (target.n_product - y[0]) / p.tau_prod;
    dy[1] = (target.i_product - y[1]) / p.tau_purity;
    dy[2] = (target.dt_irc - y[2]) / p.tau_irc;
    dy[3] = flows.f_tank - flows.evap;
    return dy;
  };

  PlantOdeState y{state.lag_prod, state.lag_purity, state.lag_irc, state.n_tank};
  for (int i = 0; i < n_sub; ++i) {
    detail::StageFlows f1, f2, f3, f4;
    const PlantOdeState k1 = rhs(y, f1);
    if (f1.evap > 0.0 && y[3] <= 0.0) {
      out.status = StepStatus::TankEmpty;
      break;
    }
    const PlantOdeState k2 = rhs(y + 0.5 * h * k1, f2);
    const PlantOdeState k3 = rhs(y + 0.5 * h * k2, f3);
    const PlantOdeState k4 = rhs(y + h * k3, f4);
    // The tank increment is taken from the same stage-weighted flows that the
    // audit accumulates, so the balance closes to rounding.
    const double f_avg = (f1.f_tank + 2.0 * f2.f_tank + 2.0 * f3.f_tank + f4.f_tank) / 6.0;
    const double e_avg = (f1.evap + 2.0 * f2.evap + 2.0 * f3.evap + f4.evap) / 6.0;
    const double tank_before = y[3];
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    y[3] = tank_before + (f_avg - e_avg) * h;
    out.audit.tank_net_inflow += (f_avg - e_avg) * h;
    if (y[3] < 0.0) {
      out.audit.tank_net_inflow -= y[3];
      y[3] = 0.0;
      out.status = StepStatus::TankEmpty;
      break;
    }
  }

  PlantState next = state;
  next.lag_prod = y[0];
  next.lag_purity = y[1];
  next.lag_irc = y[2];
  next.n_tank = y[3];
  next.n_product = std::max(y[0], 0.0);
  next.i_product = std::max(y[1], 0.0);
  next.dt_irc = y[2];
  next.f_tank = detail::stage_flows(next.n_product, n_demand).f_tank;
  next.t_sim = state.t_sim + dt;
  out.state = next;
  if (out.status == StepStatus::Ok && !next.finite()) out.status = StepStatus::NonFinite;
  return out;
}

/// Electrical power of compressor, liquefier and turbine at the given state.
inline PowerBreakdown power(const PlantState& state, const ManipulatedVars& mv, const PlantParams& p = {}) {
  PowerBreakdown pw;
  pw.p_comp = p.k_comp * mv.n_mac;
  pw.p_liq = p.k_liq * state.f_tank;
  pw.p_tur = p.k_tur * mv.xi_tur * mv.n_mac;
  return pw;
}

// ---------------------------------------------------------------------------
// Operational constraints

enum class ConstraintKind { Path, Terminal };
enum class ConstrainedQuantity { ImpurityPpm, IrcDeltaT, TankHoldup, TankInflow };

struct ConstraintRow {
  std::string name;
  ConstrainedQuantity quantity;
  ConstraintKind kind;
  double lower;  // -inf when absent
  double upper;  // +inf when absent
  double scale;
};

struct ConstraintSpec {
  std::vector<ConstraintRow> rows;

  /// The operating envelope: impurity, IRC temperature difference, tank
  /// holdup band, non-negative liquefier flow, and the terminal holdup.
  static ConstraintSpec standard() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {{
        {"i_product", ConstrainedQuantity::ImpurityPpm, ConstraintKind::Path, 0.0, 1500.0, 1500.0},
        {"dt_irc", ConstrainedQuantity::IrcDeltaT, ConstraintKind::Path, 2.0, 5.0, 3.0},
        {"n_tank", ConstrainedQuantity::TankHoldup, ConstraintKind::Path, 864000.0, 3456000.0, 2592000.0},
        {"f_tank", ConstrainedQuantity::TankInflow, ConstraintKind::Path, 0.0, inf, 1.0},
        {"n_tank_terminal", ConstrainedQuantity::TankHoldup, ConstraintKind::Terminal, kTankTarget, kTankTarget,
         kTankTarget},
    }};
  }

  /// Names of the entries returned by constraint_values, in order.
  std::vector<std::string> path_entry_names() const {
    std::vector<std::string> names;
    for (const auto& r : rows) {
      if (r.kind != ConstraintKind::Path) continue;
      if (std::isfinite(r.lower)) names.push_back(r.name + "_lower");
      if (std::isfinite(r.upper)) names.push_back(r.name + "_upper");
    }
    return names;
  }
};

inline double quantity_value(const PlantState& s, ConstrainedQuantity q) {
  switch (q) {
    case ConstrainedQuantity::ImpurityPpm: return s.i_product;
    case ConstrainedQuantity::IrcDeltaT: return s.dt_irc;
    case ConstrainedQuantity::TankHoldup: return s.n_tank;
    case ConstrainedQuantity::TankInflow: return s.f_tank;
  }
  return 0.0;
}

/// Normalized path-constraint values g <= 0. For each path row, the lower
/// bound entry (lb - v)/scale precedes the upper bound entry (v - ub)/scale;
/// infinite bounds are skipped. With the standard spec the order is
/// i_product lo/hi, dt_irc lo/hi, n_tank lo/hi, f_tank lo.
inline std::vector<double> constraint_values(const PlantState& s, const ConstraintSpec& spec = ConstraintSpec::standard()) {
  std::vector<double> g;
  g.reserve(spec.rows.size() * 2);
  for (const auto& r : spec.rows) {
    if (r.kind != ConstraintKind::Path) continue;
    const double v = quantity_value(s, r.quantity);
    if (std::isfinite(r.lower)) g.push_back((r.lower - v) / r.scale);
    if (std::isfinite(r.upper)) g.push_back((v - r.upper) / r.scale);
  }
  return g;
}

/// Normalized deviation of the terminal equality row (first terminal row).
inline double terminal_deviation(const PlantState& s, const ConstraintSpec& spec = ConstraintSpec::standard()) {
  for (const auto& r : spec.rows) {
    if (r.kind == ConstraintKind::Terminal) return (quantity_value(s, r.quantity) - r.upper) / r.scale;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Reset and observation

struct PlantStateOverrides {
  std::optional<double> i_product;
  std::optional<double> dt_irc;
  std::optional<double> n_tank;
  std::optional<double> n_product;
  std::optional<double> t_sim;
};

/// Nominal steady state with the tank at its mid-level target.
inline PlantState nominal_state(const PlantParams& p = {}, double n_demand = 20.0) {
  const SteadyOutputs ss = steady_outputs(p.nominal, p);
  PlantState s;
  s.n_product = s.lag_prod = ss.n_product;
  s.i_product = s.lag_purity = ss.i_product;
  s.dt_irc = s.lag_irc = ss.dt_irc;
  s.n_tank = kTankTarget;
  s.f_tank = detail::stage_flows(s.n_product, n_demand).f_tank;
  s.t_sim = 0.0;
  return s;
}

inline PlantState reset(std::uint64_t seed, const std::optional<PlantStateOverrides>& overrides = std::nullopt,
                        const PlantParams& p = {}, double n_demand = 20.0) {
  PlantState s = nominal_state(p, n_demand);
  if (p.reset_tank_jitter > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-p.reset_tank_jitter, p.reset_tank_jitter);
    s.n_tank *= 1.0 + u(rng);
  }
  if (overrides) {
    const auto& o = *overrides;
    if (o.i_product) s.i_product = s.lag_purity = *o.i_product;
    if (o.dt_irc) s.dt_irc = s.lag_irc = *o.dt_irc;
    if (o.n_tank) s.n_tank = *o.n_tank;
    if (o.n_product) {
      s.n_product = s.lag_prod = *o.n_product;
      s.f_tank = detail::stage_flows(s.n_product, n_demand).f_tank;
    }
    if (o.t_sim) s.t_sim = *o.t_sim;
    if (!s.valid() || s.t_sim < 0.0) throw Error(ErrorCode::InvalidOverride, "reset: override violates plant state invariants");
  }
  return s;
}

/// Fixed affine normalization of the observation vector: each physical entry
/// maps to (value - offset) / scale.
struct ObservationScaling {
  double i_product_offset = 900.0, i_product_scale = 600.0;
  double dt_irc_offset = 3.5, dt_irc_scale = 1.5;
  double n_tank_offset = kTankTarget, n_tank_scale = 172800.0;
  double f_tank_offset = 4.0, f_tank_scale = 4.0;
  double price_offset = 50.0, price_scale = 50.0;
  double t_day_scale = 24.0;
};

/// Observation layout: [i_product, dt_irc, n_tank, f_tank, p_t .. p_t+11, t_day].
inline Observation observe(const PlantState& s, std::span<const double> price_forecast, double t_day,
                           const ObservationScaling& k = {}) {
  if (price_forecast.size() != static_cast<std::size_t>(kForecastHours)) {
    throw Error(ErrorCode::DimensionMismatch, "observe: price forecast must have 12 entries");
  }
  if (t_day < 0.0 || t_day > 24.0) throw Error(ErrorCode::InvalidArgument, "observe: t_day outside [0, 24]");
  Observation o;
  o[0] = (s.i_product - k.i_product_offset) / k.i_product_scale;
  o[1] = (s.dt_irc - k.dt_irc_offset) / k.dt_irc_scale;
  o[2] = (s.n_tank - k.n_tank_offset) / k.n_tank_scale;
  o[3] = (s.f_tank - k.f_tank_offset) / k.f_tank_scale;
  for (int i = 0; i < kForecastHours; ++i) o[4 + i] = (price_forecast[i] - k.price_offset) / k.price_scale;
  o[16] = t_day / k.t_day_scale;
  return o;
}

}  // namespace asuflex
