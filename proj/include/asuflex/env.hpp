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

// Episodic environments for the two architectures. Direct: the agent sets the
// four MVs. Hierarchical: the agent sets the product-rate target of an LMPC,
// which sets the MVs.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asuflex/error.hpp"
#include "asuflex/lmpc.hpp"
#include "asuflex/plant.hpp"
#include "asuflex/pricing.hpp"
#include "asuflex/reward.hpp"
#include "asuflex/sysid.hpp"

namespace asuflex {

enum class Architecture { Direct, Hierarchical };

inline std::string to_string(Architecture a) { return a == Architecture::Direct ? "direct" : "hier"; }

inline Architecture parse_architecture(const std::string& s) {
  if (s == "direct") return Architecture::Direct;
  if (s == "hier" || s == "hierarchical") return Architecture::Hierarchical;
  throw Error(ErrorCode::ConfigError, "unknown architecture '" + s + "' (expected direct or hier)");
}

/// Affine map between normalized actions in [-1, 1] and physical ranges.
struct ActionSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }

  static ActionSpec direct() { return {MvBounds::lower(), MvBounds::upper()}; }
  static ActionSpec hierarchical(double sp_lo = 15.0, double sp_hi = 30.0) {
    return {Eigen::VectorXd::Constant(1, sp_lo), Eigen::VectorXd::Constant(1, sp_hi)};
  }

  Eigen::VectorXd to_physical(const Eigen::VectorXd& a) const {
    if (a.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "action: dimension mismatch");
    return (lower.array() + 0.5 * (a.array() + 1.0) * (upper - lower).array()).matrix();
  }
  Eigen::VectorXd to_normalized(const Eigen::VectorXd& u) const {
    if (u.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "action: dimension mismatch");
    return (2.0 * (u - lower).array() / (upper - lower).array() - 1.0).matrix();
  }
};

struct EpisodeConfig {
  int steps_per_episode = 96;
  double dt = 900.0;         // s
  double n_demand = 20.0;    // mol/s
  double setpoint_lo = 15.0; // mol/s
  double setpoint_hi = 30.0; // mol/s
  Architecture arch = Architecture::Hierarchical;
  PlantParams plant{};
  PenaltyConfig penalty{};
  ConstraintSpec constraints = ConstraintSpec::standard();
  ObservationScaling scaling{};
  MpcConfig mpc = MpcConfig::plant_default();

  void validate() const {
    if (steps_per_episode < 1 || !(dt > 0.0) || std::abs(steps_per_episode * dt - 86400.0) > 1e-9) {
      throw Error(ErrorCode::ConfigError, "episode: steps_per_episode * dt must equal 86400 s");
    }
    if (!(n_demand > 0.0)) throw Error(ErrorCode::ConfigError, "episode: demand must be positive");
    if (!(setpoint_lo < setpoint_hi) || setpoint_lo < 0.0) {
      throw Error(ErrorCode::ConfigError, "episode: setpoint range must satisfy 0 <= lo < hi");
    }
    penalty.validate();
  }

  ActionSpec action_spec() const {
    return arch == Architecture::Direct ? ActionSpec::direct() : ActionSpec::hierarchical(setpoint_lo, setpoint_hi);
  }
};

struct StepInfo {
  PlantState state;                 // after the step
  ManipulatedVars mv;               // applied
  double xi_liq = 0.0;
  double setpoint = std::numeric_limits<double>::quiet_NaN();
  double price = 0.0;               // $/MWh in effect during the step
  PowerBreakdown power;
  std::vector<double> g;            // normalized path constraint values
  double h = 0.0;                   // normalized terminal deviation
  RewardBreakdown reward;
  bool fault = false;
  int qp_iterations = 0;
  QpStatus qp_status = QpStatus::Solved;
  int step = 0;                     // 1-based index of the completed step
};

struct EnvStep {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Reward of one realized interval. Both architectures go through here.
inline RewardBreakdown interval_reward(const PlantState& next, const ManipulatedVars& mv, double price,
                                       const EpisodeConfig& cfg, bool fault, std::vector<double>* g_out = nullptr,
                                       double* h_out = nullptr, PowerBreakdown* pw_out = nullptr) {
  const PowerBreakdown pw = power(next, mv, cfg.plant);
  const std::vector<double> g = constraint_values(next, cfg.constraints);
  const double h = terminal_deviation(next, cfg.constraints);
  const RewardBreakdown r = reward_terms(price, pw, cfg.dt / 3600.0, g, h, next.t_sim / 3600.0, cfg.penalty, fault);
  if (g_out) *g_out = g;
  if (h_out) *h_out = h;
  if (pw_out) *pw_out = pw;
  return r;
}

class AsuEnv {
 public:
  AsuEnv(EpisodeConfig cfg, PriceProfile profile, std::optional<LinearModel> model = std::nullopt)
      : cfg_(std::move(cfg)), profile_(std::move(profile)), spec_(cfg_.action_spec()) {
    cfg_.validate();
    profile_.validate();
    if (cfg_.arch == Architecture::Hierarchical) {
      if (!model) throw Error(ErrorCode::ConfigError, "hierarchical environment needs an identified model");
      if (model->m() != kNumMvs || model->p() != kNumControlledOutputs) {
        throw Error(ErrorCode::DimensionMismatch, "hierarchical environment: model must map 4 MVs to 4 outputs");
      }
      mpc_.emplace(LmpcController::for_plant(std::move(*model), cfg_.mpc));
    }
  }

  const EpisodeConfig& config() const { return cfg_; }
  const ActionSpec& action_spec() const { return spec_; }
  int action_dim() const { return spec_.dim(); }
  const PriceProfile& profile() const { return profile_; }
  void set_profile(PriceProfile p) {
    p.validate();
    profile_ = std::move(p);
  }
  const PlantState& state() const { return state_; }
  int steps_taken() const { return steps_; }
  bool done() const { return done_; }

  Observation reset(std::uint64_t seed, const std::optional<PlantStateOverrides>& overrides = std::nullopt) {
    state_ = asuflex::reset(seed, overrides, cfg_.plant, cfg_.n_demand);
    state_.t_sim = 0.0;
    steps_ = 0;
    done_ = false;
    if (mpc_) mpc_->reset();
    return current_observation();
  }

  EnvStep step(const Eigen::VectorXd& action) {
    if (done_) throw Error(ErrorCode::EpisodeFinished, "env: step called after the episode ended");
    if (action.size() != spec_.dim()) throw Error(ErrorCode::DimensionMismatch, "env: action dimension mismatch");
    if (!action.allFinite() || action.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
      throw Error(ErrorCode::OutOfRange, "env: action outside [-1, 1]");
    }
    const Eigen::VectorXd a = action.cwiseMax(-1.0).cwiseMin(1.0);

    EnvStep out;
    StepInfo& info = out.info;
    info.price = profile_.price_at(state_.t_sim);
    if (cfg_.arch == Architecture::Direct) {
      info.mv = ManipulatedVars::from_vector(spec_.to_physical(a));
    } else {
      info.setpoint = spec_.to_physical(a)[0];
      Eigen::VectorXd y_sp = mpc_->model().y_ss;
      y_sp[0] = info.setpoint;
      const LmpcOutput u = mpc_->step(controlled_outputs(state_), y_sp);
      info.mv = ManipulatedVars::from_vector(u.u);
      info.qp_iterations = u.qp.iterations;
      info.qp_status = u.qp.status;
    }

    const StepResult sr = asuflex::step(state_, info.mv, cfg_.n_demand, cfg_.dt, cfg_.plant);
    if (sr.status == StepStatus::NonFinite) throw Error(ErrorCode::NonFiniteLoss, "env: plant state became non-finite");
    info.fault = sr.status == StepStatus::TankEmpty;
    state_ = sr.state;
    ++steps_;
    info.step = steps_;
    info.state = state_;
    info.xi_liq = liq_split(state_.n_product, cfg_.n_demand);
    info.reward = interval_reward(state_, info.mv, info.price, cfg_, info.fault, &info.g, &info.h, &info.power);
    out.reward = info.reward.total();
    done_ = info.fault || steps_ >= cfg_.steps_per_episode;
    out.done = done_;
    out.obs = current_observation();
    return out;
  }

 private:
  Observation current_observation() const {
    const double t = std::min(state_.t_sim, 86400.0);
    const auto fc = forecast(profile_, t);
    return observe(state_, fc, t / 3600.0, cfg_.scaling);
  }

  EpisodeConfig cfg_;
  PriceProfile profile_;
  ActionSpec spec_;
  std::optional<LmpcController> mpc_;
  PlantState state_{};
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace asuflex
