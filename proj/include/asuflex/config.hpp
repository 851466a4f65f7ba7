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

// Run configuration and its versioned JSON form. Every key is optional; absent
// keys keep their defaults and unknown keys are rejected.

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "asuflex/ddpg.hpp"
#include "asuflex/env.hpp"
#include "asuflex/error.hpp"
#include "asuflex/serialization.hpp"
#include "asuflex/sysid.hpp"

namespace asuflex {

struct PriceConfig {
  double base = 50.0;        // $/MWh
  double peak_amp = 40.0;    // $/MWh
  double noise_frac = 0.05;  // uniform noise as a fraction of base, 0 disables
  std::uint64_t eval_seed = 1000;
};

struct RunConfig {
  Architecture arch = Architecture::Hierarchical;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  long total_steps = 10000;
  long eval_every = 96;
  int eval_episodes = 1;
  std::string profile_path;       // training prices; empty: synthetic per episode
  std::string eval_profile_path;  // held-out prices; empty: synthetic from prices.eval_seed
  std::string model_path;         // empty: <out_dir>/model.json
  std::string out_dir = "runs";
  std::string mv_script_path;     // simulate: CSV of MVs per step
  PriceConfig prices{};
  EpisodeConfig episode{};
  DdpgHyper ddpg{};
  SysidConfig sysid{};

  void validate() const {
    if (total_steps < 1) throw Error(ErrorCode::ConfigError, "total_steps must be >= 1");
    if (seeds.empty()) throw Error(ErrorCode::ConfigError, "at least one seed is required");
    if (eval_every < 1 || eval_episodes < 1) throw Error(ErrorCode::ConfigError, "eval_every and eval_episodes must be >= 1");
    if (prices.noise_frac < 0.0 || prices.noise_frac > 0.05) {
      throw Error(ErrorCode::ConfigError, "prices.noise_frac must lie in [0, 0.05]");
    }
    if (sysid.order < 1 || sysid.order > 2 || !(sysid.amplitude > 0.0) || !(sysid.duration > 0.0) ||
        sysid.validation_samples < 1 || !(sysid.nrmse_threshold > 0.0)) {
      throw Error(ErrorCode::ConfigError, "sysid: invalid settings");
    }
    episode.validate();
    ddpg.validate();
    episode.mpc.validate(kNumMvs, kNumControlledOutputs);
  }

  /// Output directory after the ASUFLEX_OUT override.
  std::string resolved_out_dir() const {
    if (const char* env = std::getenv("ASUFLEX_OUT"); env && *env) return env;
    return out_dir;
  }

  std::string resolved_model_path() const {
    if (!model_path.empty()) return model_path;
    return (std::filesystem::path(resolved_out_dir()) / "model.json").string();
  }

  /// Sysid settings bound to the episode's plant, demand and sample time.
  SysidConfig resolved_sysid() const {
    SysidConfig s = sysid;
    s.setup.params = episode.plant;
    s.setup.n_demand = episode.n_demand;
    s.setup.dt = episode.dt;
    return s;
  }
};

namespace detail {

template <class T>
T config_get(const Json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::ConfigError, "config: wrong type for '" + key + "'");
  }
}

inline const Json& config_object(const Json& v, const std::string& key) {
  if (!v.is_object()) throw Error(ErrorCode::ConfigError, "config: '" + key + "' must be an object");
  return v;
}

inline Eigen::VectorXd config_vector(const Json& v, const std::string& key) {
  const auto xs = config_get<std::vector<double>>(v, key);
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

[[noreturn]] inline void unknown_key(const std::string& section, const std::string& key) {
  throw Error(ErrorCode::ConfigError, "config: unknown key '" + (section.empty() ? key : section + "." + key) + "'");
}

}  // namespace detail

inline Json config_to_json(const RunConfig& c) {
  const EpisodeConfig& e = c.episode;
  const MpcConfig& m = e.mpc;
  Json j{{"schema", "asuflex.config"}, {"version", kConfigSchemaVersion}};
  j["arch"] = to_string(c.arch);
  j["seeds"] = c.seeds;
  j["total_steps"] = c.total_steps;
  j["eval_every"] = c.eval_every;
  j["eval_episodes"] = c.eval_episodes;
  j["paths"] = {{"profile", c.profile_path},
                {"eval_profile", c.eval_profile_path},
                {"model", c.model_path},
                {"out_dir", c.out_dir},
                {"mv_script", c.mv_script_path}};
  j["prices"] = {{"base", c.prices.base},
                 {"peak_amp", c.prices.peak_amp},
                 {"noise_frac", c.prices.noise_frac},
                 {"eval_seed", c.prices.eval_seed}};
  j["episode"] = {{"steps_per_episode", e.steps_per_episode},
                  {"dt", e.dt},
                  {"demand", e.n_demand},
                  {"setpoint_lo", e.setpoint_lo},
                  {"setpoint_hi", e.setpoint_hi},
                  {"reset_tank_jitter", e.plant.reset_tank_jitter}};
  j["penalty"] = {{"lambda_path", e.penalty.lambda_path},
                  {"lambda_terminal", e.penalty.lambda_term},
                  {"t_activate_h", e.penalty.t_activate},
                  {"fault_penalty", e.penalty.fault_penalty}};
  j["mpc"] = {{"horizon", m.horizon},
              {"q", detail::vector_json(m.q)},
              {"r", detail::vector_json(m.r)},
              {"bias_gain", m.bias_gain},
              {"output_scale", detail::vector_json(m.output_scale)},
              {"input_scale", detail::vector_json(m.input_scale)},
              {"qp_tol", m.qp_tol},
              {"qp_max_iter", m.qp_max_iter}};
  j["ddpg"] = hyper_to_json(c.ddpg);
  j["sysid"] = {{"amplitude", c.sysid.amplitude},
                {"duration_s", c.sysid.duration},
                {"order", c.sysid.order},
                {"seed", c.sysid.seed},
                {"validation_samples", c.sysid.validation_samples},
                {"nrmse_threshold", c.sysid.nrmse_threshold},
                {"measurement_noise", c.sysid.setup.measurement_noise}};
  return j;
}

/// Parses a configuration object. A missing or different version is a
/// SchemaMismatch; anything else malformed is a ConfigError.
inline RunConfig config_from_json(const Json& j) {
  using detail::config_get;
  using detail::config_vector;
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config: top level must be an object");
  if (!j.contains("version")) throw Error(ErrorCode::SchemaMismatch, "config: missing 'version'");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != kConfigSchemaVersion) {
    throw Error(ErrorCode::SchemaMismatch,
                "config: unsupported version " + j["version"].dump() + ", expected " + std::to_string(kConfigSchemaVersion));
  }
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "version") continue;
    if (key == "schema") {
      if (config_get<std::string>(v, key) != "asuflex.config") throw Error(ErrorCode::SchemaMismatch, "config: wrong schema");
    } else if (key == "arch") {
      c.arch = parse_architecture(config_get<std::string>(v, key));
    } else if (key == "seeds") {
      c.seeds = config_get<std::vector<std::uint64_t>>(v, key);
    } else if (key == "total_steps") {
      c.total_steps = config_get<long>(v, key);
    } else if (key == "eval_every") {
      c.eval_every = config_get<long>(v, key);
    } else if (key == "eval_episodes") {
      c.eval_episodes = config_get<int>(v, key);
    } else if (key == "paths") {
      for (const auto& [k, x] : detail::config_object(v, key).items()) {
        if (k == "profile") c.profile_path = config_get<std::string>(x, k);
        else if (k == "eval_profile") c.eval_profile_path = config_get<std::string>(x, k);
        else if (k == "model") c.model_path = config_get<std::string>(x, k);
        else if (k == "out_dir") c.out_dir = config_get<std::string>(x, k);
        else if (k == "mv_script") c.mv_script_path = config_get<std::string>(x, k);
        else detail::unknown_key(key, k);
      }
    } else if (key == "prices") {
      for (const auto& [k, x] : detail::config_object(v, key).items()) {
        if (k == "base") c.prices.base = config_get<double>(x, k);
        else if (k == "peak_amp") c.prices.peak_amp = config_get<double>(x, k);
        else if (k == "noise_frac") c.prices.noise_frac = config_get<double>(x, k);
        else if (k == "eval_seed") c.prices.eval_seed = config_get<std::uint64_t>(x, k);
        else detail::unknown_key(key, k);
      }
    } else if (key == "episode") {
      for (const auto& [k, x] : detail::config_object(v, key).items()) {
        if (k == "steps_per_episode") c.episode.steps_per_episode = config_get<int>(x, k);
        else if (k == "dt") c.episode.dt = config_get<double>(x, k);
        else if (k == "demand") c.episode.n_demand = config_get<double>(x, k);
        else if (k == "setpoint_lo") c.episode.setpoint_lo = config_get<double>(x, k);
        else if (k == "setpoint_hi") c.episode.setpoint_hi = config_get<double>(x, k);
        else if (k == "reset_tank_jitter") c.episode.plant.reset_tank_jitter = config_get<double>(x, k);
        else detail::unknown_key(key, k);
      }
    } else if (key == "penalty") {
      for (const auto& [k, x] : detail::config_object(v, key).items()) {
        if (k == "lambda_path") c.episode.penalty.lambda_path = config_get<double>(x, k);
        else if (k == "lambda_terminal") c.episode.penalty.lambda_term = config_get<double>(x, k);
        else if (k == "t_activate_h") c.episode.penalty.t_activate = config_get<double>(x, k);
        else if (k == "fault_penalty") c.episode.penalty.fault_penalty = config_get<double>(x, k);
        else detail::unknown_key(key, k);
      }
    } else if (key == "mpc") {
      MpcConfig& m = c.episode.mpc;
      for (const auto& [k, x] : detail::config_object(v, key).items()) {
        if (k == "horizon") m.horizon = config_get<int>(x, k);
        else if (k == "q") m.q = config_vector(x, k);
        else if (k == "r") m.r = config_vector(x, k);
        else if (k == "bias_gain") m.bias_gain = config_get<double>(x, k);
        else if (k == "output_scale") m.output_scale = config_vector(x, k);
        else if (k == "input_scale") m.input_scale = config_vector(x, k);
        else if (k == "qp_tol") m.qp_tol = config_get<double>(x, k);
        else if (k == "qp_max_iter") m.qp_max_iter = config_get<int>(x, k);
        else detail::unknown_key(key, k);
      }
    } else if (key == "ddpg") {
      try {
        hyper_from_json(detail::config_object(v, key), c.ddpg);
      } catch (const Json::exception&) {
        throw Error(ErrorCode::ConfigError, "config: wrong type in 'ddpg'");
      }
    } else if (key == "sysid") {
      for (const auto& [k, x] : detail::config_object(v, key).items()) {
        if (k == "amplitude") c.sysid.amplitude = config_get<double>(x, k);
        else if (k == "duration_s") c.sysid.duration = config_get<double>(x, k);
        else if (k == "order") c.sysid.order = config_get<int>(x, k);
        else if (k == "seed") c.sysid.seed = config_get<std::uint64_t>(x, k);
        else if (k == "validation_samples") c.sysid.validation_samples = config_get<int>(x, k);
        else if (k == "nrmse_threshold") c.sysid.nrmse_threshold = config_get<double>(x, k);
        else if (k == "measurement_noise") c.sysid.setup.measurement_noise = config_get<double>(x, k);
        else detail::unknown_key(key, k);
      }
    } else {
      detail::unknown_key("", key);
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

inline void save_config(const std::string& path, const RunConfig& c) { detail::write_json_file(path, config_to_json(c)); }

}  // namespace asuflex
