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

// Reward shaping. All penalty weights are non-negative and penalties enter the
// reward with an explicit minus sign, so every penalty term is <= 0.

#include <cmath>
#include <span>

#include "asuflex/error.hpp"
#include "asuflex/plant.hpp"

namespace asuflex {

struct PenaltyConfig {
  double lambda_path = 10.0;
  double lambda_term = 1000.0;
  double t_activate = 18.0;  // h
  double fault_penalty = 50.0;

  void validate() const {
    const bool ok = std::isfinite(lambda_path) && lambda_path >= 0.0 && std::isfinite(lambda_term) &&
                    lambda_term >= 0.0 && std::isfinite(fault_penalty) && fault_penalty >= 0.0 &&
                    t_activate >= 0.0 && t_activate < 24.0;
    if (!ok) throw Error(ErrorCode::ConfigError, "penalty config: weights must be finite and >= 0, 0 <= t_activate < 24");
  }
};

/// Negative electricity cost of one interval: -price * (P_comp + P_liq - P_tur) * dt.
inline double elec_reward(double price, const PowerBreakdown& pw, double dt_h) {
  return -price * (pw.p_comp + pw.p_liq - pw.p_tur) * dt_h;
}

inline double path_penalty(double g, double lambda) { return g > 0.0 ? -lambda * g : 0.0; }

/// Quadratic relaxation of a terminal equality, active strictly after t_activate.
/// Squaring covers both signs of the deviation.
inline double terminal_penalty(double h_val, double t_h, const PenaltyConfig& cfg) {
  return t_h > cfg.t_activate ? -cfg.lambda_term * h_val * h_val : 0.0;
}

struct RewardBreakdown {
  double elec = 0.0;
  double path = 0.0;
  double terminal = 0.0;
  double fault = 0.0;

  double total() const { return elec + path + terminal + fault; }
};

inline RewardBreakdown reward_terms(double price, const PowerBreakdown& pw, double dt_h, std::span<const double> g,
                                    double h_val, double t_h, const PenaltyConfig& cfg, bool fault) {
  RewardBreakdown r;
  r.elec = elec_reward(price, pw, dt_h);
  for (double gi : g) r.path += path_penalty(gi, cfg.lambda_path);
  r.terminal = terminal_penalty(h_val, t_h, cfg);
  r.fault = fault ? -cfg.fault_penalty : 0.0;
  return r;
}

inline double total_reward(double price, const PowerBreakdown& pw, double dt_h, std::span<const double> g,
                           double h_val, double t_h, const PenaltyConfig& cfg, bool fault) {
  return reward_terms(price, pw, dt_h, g, h_val, t_h, cfg, fault).total();
}

}  // namespace asuflex
