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

// Versioned JSON for identified models and agent checkpoints. Doubles are
// written as shortest round-trip decimals, so load(save(x)) == x bit for bit.

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "asuflex/ddpg.hpp"
#include "asuflex/error.hpp"
#include "asuflex/mlp.hpp"
#include "asuflex/sysid.hpp"

namespace asuflex {

using Json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;
inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string("cannot serialize non-finite ") + what);
}

inline Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) {
    require_finite(v[i], "vector entry");
    out.push_back(v[i]);
  }
  return out;
}

/// Row-major nested arrays.
inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (int i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

inline Eigen::VectorXd vector_from(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::CorruptFile, "expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::CorruptFile, "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Eigen::MatrixXd matrix_from(const Json& j, Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) throw Error(ErrorCode::CorruptFile, "expected an array of rows");
  if (j.empty()) return Eigen::MatrixXd(0, cols_if_empty);
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Eigen::VectorXd row = vector_from(j[i]);
    if (row.size() != cols) throw Error(ErrorCode::CorruptFile, "ragged matrix rows");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

inline void check_header(const Json& j, const std::string& schema, int version) {
  if (!j.is_object() || !j.contains("schema") || !j.contains("version")) {
    throw Error(ErrorCode::CorruptFile, "missing schema/version header (expected " + schema + ")");
  }
  if (!j["schema"].is_string() || j["schema"].get<std::string>() != schema) {
    throw Error(ErrorCode::SchemaMismatch, "schema is not " + schema);
  }
  if (!j["version"].is_number_integer() || j["version"].get<int>() != version) {
    throw Error(ErrorCode::SchemaMismatch, schema + ": unsupported version " + j["version"].dump() + ", expected " +
                                               std::to_string(version));
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

/// Runs a decoder, mapping library type errors onto CorruptFile.
template <class F>
auto decode(const std::string& what, F f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptFile, what + ": " + e.what());
  }
}

template <class Engine>
std::string engine_state(const Engine& e) {
  std::ostringstream os;
  os << e;
  return os.str();
}

template <class Engine>
void restore_engine(Engine& e, const std::string& s) {
  std::istringstream is(s);
  is >> e;
  if (!is) throw Error(ErrorCode::CorruptFile, "invalid random engine state");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Identified model

inline Json model_to_json(const LinearModel& m, const FitReport* report = nullptr) {
  m.check_dimensions();
  Json j{{"schema", "asuflex.model"}, {"version", kModelSchemaVersion}};
  j["dt"] = m.dt;
  j["order"] = m.order;
  j["a"] = detail::matrix_json(m.a);
  j["b"] = detail::matrix_json(m.b);
  j["c"] = detail::matrix_json(m.c);
  j["x_ss"] = detail::vector_json(m.x_ss);
  j["u_ss"] = detail::vector_json(m.u_ss);
  j["y_ss"] = detail::vector_json(m.y_ss);
  j["provenance_seeds"] = m.provenance_seeds;
  if (report) {
    Json v;
    v["nrmse"] = Json::array();
    for (int i = 0; i < report->nrmse.size(); ++i) {
      v["nrmse"].push_back(std::isfinite(report->nrmse[i]) ? Json(report->nrmse[i]) : Json(nullptr));
    }
    v["gate_output"] = report->gate_output;
    v["threshold"] = report->threshold;
    v["pass"] = report->pass;
    j["validation"] = v;
  }
  return j;
}

inline LinearModel model_from_json(const Json& j) {
  detail::check_header(j, "asuflex.model", kModelSchemaVersion);
  return detail::decode("model", [&] {
    LinearModel m;
    m.dt = j.at("dt").get<double>();
    m.order = j.at("order").get<int>();
    m.a = detail::matrix_from(j.at("a"));
    m.b = detail::matrix_from(j.at("b"));
    m.c = detail::matrix_from(j.at("c"), m.a.rows());
    m.x_ss = detail::vector_from(j.at("x_ss"));
    m.u_ss = detail::vector_from(j.at("u_ss"));
    m.y_ss = detail::vector_from(j.at("y_ss"));
    m.provenance_seeds = j.at("provenance_seeds").get<std::vector<std::uint64_t>>();
    try {
      m.check_dimensions();
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptFile, std::string("model: ") + e.what());
    }
    return m;
  });
}

inline void save_model(const std::string& path, const LinearModel& m, const FitReport* report = nullptr) {
  detail::write_json_file(path, model_to_json(m, report));
}

inline LinearModel load_model(const std::string& path) { return model_from_json(detail::read_json_file(path)); }

// ---------------------------------------------------------------------------
// Networks and hyperparameters

inline Json mlp_to_json(const Mlp& net) {
  Json j;
  j["layer_sizes"] = net.layer_sizes();
  j["output"] = net.output_activation() == OutputActivation::Tanh ? "tanh" : "linear";
  j["weights"] = Json::array();
  j["biases"] = Json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    j["weights"].push_back(detail::matrix_json(net.weights()[static_cast<std::size_t>(l)]));
    j["biases"].push_back(detail::vector_json(net.biases()[static_cast<std::size_t>(l)]));
  }
  return j;
}

inline Mlp mlp_from_json(const Json& j) {
  return detail::decode("network", [&] {
    const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    const std::string out = j.at("output").get<std::string>();
    if (out != "tanh" && out != "linear") throw Error(ErrorCode::CorruptFile, "network: unknown output activation");
    if (sizes.size() < 2) throw Error(ErrorCode::CorruptFile, "network: need at least two layer widths");
    Mlp net = Mlp::zeros(sizes, out == "tanh" ? OutputActivation::Tanh : OutputActivation::Linear);
    const Json& w = j.at("weights");
    const Json& b = j.at("biases");
    if (w.size() != sizes.size() - 1 || b.size() != sizes.size() - 1) {
      throw Error(ErrorCode::CorruptFile, "network: layer count mismatch");
    }
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const Eigen::MatrixXd wl = detail::matrix_from(w[l]);
      const Eigen::VectorXd bl = detail::vector_from(b[l]);
      if (wl.rows() != sizes[l + 1] || wl.cols() != sizes[l] || bl.size() != sizes[l + 1]) {
        throw Error(ErrorCode::CorruptFile, "network: layer dimensions do not chain");
      }
      net.weights()[l] = wl;
      net.biases()[l] = bl;
    }
    return net;
  });
}

inline Json adam_to_json(const Adam& opt) {
  Json j;
  j["steps"] = opt.steps();
  for (const char* key : {"mw", "vw", "mb", "vb"}) j[key] = Json::array();
  for (std::size_t l = 0; l < opt.mw().size(); ++l) {
    j["mw"].push_back(detail::matrix_json(opt.mw()[l]));
    j["vw"].push_back(detail::matrix_json(opt.vw()[l]));
    j["mb"].push_back(detail::vector_json(opt.mb()[l]));
    j["vb"].push_back(detail::vector_json(opt.vb()[l]));
  }
  return j;
}

inline void adam_from_json(const Json& j, Adam& opt) {
  detail::decode("optimizer", [&] {
    const std::size_t layers = opt.mw().size();
    if (j.at("mw").size() != layers || j.at("vw").size() != layers || j.at("mb").size() != layers ||
        j.at("vb").size() != layers) {
      throw Error(ErrorCode::CorruptFile, "optimizer: layer count mismatch");
    }
    for (std::size_t l = 0; l < layers; ++l) {
      Eigen::MatrixXd mw = detail::matrix_from(j["mw"][l]), vw = detail::matrix_from(j["vw"][l]);
      Eigen::VectorXd mb = detail::vector_from(j["mb"][l]), vb = detail::vector_from(j["vb"][l]);
      if (mw.rows() != opt.mw()[l].rows() || mw.cols() != opt.mw()[l].cols() || vw.rows() != mw.rows() ||
          vw.cols() != mw.cols() || mb.size() != opt.mb()[l].size() || vb.size() != mb.size()) {
        throw Error(ErrorCode::CorruptFile, "optimizer: moment dimensions mismatch");
      }
      opt.mw()[l] = std::move(mw);
      opt.vw()[l] = std::move(vw);
      opt.mb()[l] = std::move(mb);
      opt.vb()[l] = std::move(vb);
    }
    opt.set_steps(j.at("steps").get<long>());
    return 0;
  });
}

inline Json hyper_to_json(const DdpgHyper& h) {
  return Json{{"gamma", h.gamma},
              {"tau", h.tau},
              {"lr_actor", h.lr_actor},
              {"lr_critic", h.lr_critic},
              {"batch", h.batch},
              {"noise_sigma", h.noise_sigma},
              {"noise_sigma_final", h.noise_sigma_final},
              {"warmup", h.warmup},
              {"buffer", h.buffer_capacity},
              {"hidden", h.hidden},
              {"reward_scale", h.reward_scale}};
}

/// Fills `h` from the keys present in `j`; unknown keys are rejected.
inline void hyper_from_json(const Json& j, DdpgHyper& h, ErrorCode unknown_key = ErrorCode::ConfigError) {
  if (!j.is_object()) throw Error(unknown_key, "ddpg: expected an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "gamma") h.gamma = v.get<double>();
    else if (k == "tau") h.tau = v.get<double>();
    else if (k == "lr_actor") h.lr_actor = v.get<double>();
    else if (k == "lr_critic") h.lr_critic = v.get<double>();
    else if (k == "batch") h.batch = v.get<int>();
    else if (k == "noise_sigma") h.noise_sigma = v.get<double>();
    else if (k == "noise_sigma_final") h.noise_sigma_final = v.get<double>();
    else if (k == "warmup") h.warmup = v.get<int>();
    else if (k == "buffer") h.buffer_capacity = v.get<int>();
    else if (k == "hidden") h.hidden = v.get<std::vector<int>>();
    else if (k == "reward_scale") h.reward_scale = v.get<double>();
    else throw Error(unknown_key, "ddpg: unknown key '" + k + "'");
  }
}

// ---------------------------------------------------------------------------
// Agent checkpoint

struct Checkpoint {
  std::string arch;
  DdpgHyper hyper;
  Mlp actor, critic, actor_target, critic_target;
  Adam actor_opt, critic_opt;
  long step = 0;       // environment steps taken when saved
  int episode = 0;
  double eval_return = 0.0;
  std::uint64_t seed = 0;
  std::string noise_rng;   // serialized engine state
  std::string buffer_rng;

  int obs_dim() const { return actor.input_dim(); }
  int act_dim() const { return actor.output_dim(); }

  bool operator==(const Checkpoint& o) const {
    const auto same_adam = [](const Adam& a, const Adam& b) {
      return a.steps() == b.steps() && a.mw() == b.mw() && a.vw() == b.vw() && a.mb() == b.mb() && a.vb() == b.vb();
    };
    return arch == o.arch && hyper_to_json(hyper) == hyper_to_json(o.hyper) && actor == o.actor &&
           critic == o.critic && actor_target == o.actor_target && critic_target == o.critic_target &&
           same_adam(actor_opt, o.actor_opt) && same_adam(critic_opt, o.critic_opt) && step == o.step &&
           episode == o.episode && eval_return == o.eval_return && seed == o.seed && noise_rng == o.noise_rng &&
           buffer_rng == o.buffer_rng;
  }
};

inline Checkpoint make_checkpoint(const std::string& arch, DdpgAgent& agent, long step, int episode,
                                  double eval_return, std::uint64_t seed, const std::string& noise_rng,
                                  const std::string& buffer_rng) {
  return Checkpoint{arch,          agent.hyper(), agent.actor(), agent.critic(), agent.actor_target(),
                    agent.critic_target(), agent.actor_opt(), agent.critic_opt(), step, episode,
                    eval_return,   seed,          noise_rng,     buffer_rng};
}

inline Json checkpoint_to_json(const Checkpoint& c) {
  detail::require_finite(c.eval_return, "eval_return");
  Json j{{"schema", "asuflex.checkpoint"}, {"version", kCheckpointSchemaVersion}};
  j["arch"] = c.arch;
  j["hyper"] = hyper_to_json(c.hyper);
  j["step"] = c.step;
  j["episode"] = c.episode;
  j["eval_return"] = c.eval_return;
  j["seed"] = c.seed;
  j["rng"] = {{"noise", c.noise_rng}, {"buffer", c.buffer_rng}};
  j["actor"] = mlp_to_json(c.actor);
  j["critic"] = mlp_to_json(c.critic);
  j["actor_target"] = mlp_to_json(c.actor_target);
  j["critic_target"] = mlp_to_json(c.critic_target);
  j["actor_opt"] = adam_to_json(c.actor_opt);
  j["critic_opt"] = adam_to_json(c.critic_opt);
  return j;
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  detail::check_header(j, "asuflex.checkpoint", kCheckpointSchemaVersion);
  return detail::decode("checkpoint", [&] {
    Checkpoint c;
    c.arch = j.at("arch").get<std::string>();
    hyper_from_json(j.at("hyper"), c.hyper, ErrorCode::CorruptFile);
    c.step = j.at("step").get<long>();
    c.episode = j.at("episode").get<int>();
    c.eval_return = j.at("eval_return").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.noise_rng = j.at("rng").at("noise").get<std::string>();
    c.buffer_rng = j.at("rng").at("buffer").get<std::string>();
    c.actor = mlp_from_json(j.at("actor"));
    c.critic = mlp_from_json(j.at("critic"));
    c.actor_target = mlp_from_json(j.at("actor_target"));
    c.critic_target = mlp_from_json(j.at("critic_target"));
    if (!(c.actor_target.layer_sizes() == c.actor.layer_sizes()) ||
        !(c.critic_target.layer_sizes() == c.critic.layer_sizes()) ||
        c.critic.input_dim() != c.actor.input_dim() + c.actor.output_dim()) {
      throw Error(ErrorCode::CorruptFile, "checkpoint: network shapes are inconsistent");
    }
    c.actor_opt = Adam(c.actor);
    c.critic_opt = Adam(c.critic);
    adam_from_json(j.at("actor_opt"), c.actor_opt);
    adam_from_json(j.at("critic_opt"), c.critic_opt);
    return c;
  });
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  detail::write_json_file(path, checkpoint_to_json(c));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_json(detail::read_json_file(path));
}

}  // namespace asuflex
