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

// Training and evaluation runs, metrics and CSV artifacts.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asuflex/config.hpp"
#include "asuflex/ddpg.hpp"
#include "asuflex/env.hpp"
#include "asuflex/error.hpp"
#include "asuflex/pricing.hpp"
#include "asuflex/serialization.hpp"

namespace asuflex {

namespace fs = std::filesystem;

// Random streams derived from one root seed.
enum class SeedStream : std::uint64_t { Networks = 1, Exploration = 2, Replay = 3, TrainPrices = 4, Plant = 5 };

/// splitmix64 of root + stream * golden-ratio increment.
inline std::uint64_t seed_for(std::uint64_t root, SeedStream stream) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stream);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeMetrics {
  double ret = 0.0;
  double cost = 0.0;                  // $, equals -sum of elec rewards
  int violations = 0;                 // step-constraint pairs with g > 0
  std::vector<int> violations_per_constraint;
  double violation_magnitude = 0.0;   // sum of positive normalized g
  double terminal_dev = 0.0;          // |h| at the last step
  double qp_iters_mean = 0.0;
  int steps = 0;
  bool fault = false;
};

using Policy = std::function<Eigen::VectorXd(const Observation&)>;

class EpisodeAccumulator {
 public:
  void add(const EnvStep& s) {
    const StepInfo& i = s.info;
    m_.ret += s.reward;
    m_.cost -= i.reward.elec;
    if (m_.violations_per_constraint.empty()) m_.violations_per_constraint.assign(i.g.size(), 0);
    for (std::size_t k = 0; k < i.g.size(); ++k) {
      if (i.g[k] > 0.0) {
        ++m_.violations;
        ++m_.violations_per_constraint[k];
        m_.violation_magnitude += i.g[k];
      }
    }
    m_.terminal_dev = std::abs(i.h);
    qp_total_ += i.qp_iterations;
    m_.fault = m_.fault || i.fault;
    ++m_.steps;
  }

  EpisodeMetrics result() const {
    EpisodeMetrics out = m_;
    out.qp_iters_mean = m_.steps > 0 ? static_cast<double>(qp_total_) / m_.steps : 0.0;
    return out;
  }

 private:
  EpisodeMetrics m_;
  long qp_total_ = 0;
};

/// Deterministic rollout of `policy` for one episode.
inline EpisodeMetrics run_episode(AsuEnv& env, const Policy& policy, std::uint64_t reset_seed,
                                  std::vector<StepInfo>* trace = nullptr) {
  Observation obs = env.reset(reset_seed);
  EpisodeAccumulator acc;
  bool done = false;
  while (!done) {
    const EnvStep s = env.step(policy(obs));
    acc.add(s);
    if (trace) trace->push_back(s.info);
    obs = s.obs;
    done = s.done;
  }
  return acc.result();
}

inline Policy actor_policy(const Mlp& actor) {
  return [&actor](const Observation& o) { return actor_forward(actor, o); };
}

// ---------------------------------------------------------------------------
// Trajectories

inline const char* kTrajectoryHeader =
    "step,t_h,price,setpoint,n_mac,xi_tur,xi_top,f_drain,xi_liq,n_product,i_product,dt_irc,n_tank,f_tank,p_comp,p_liq,"
    "p_tur,reward";

inline void write_trajectory(std::ostream& out, const std::vector<StepInfo>& trace) {
  out << kTrajectoryHeader << '\n';
  for (const StepInfo& i : trace) {
    const PlantState& s = i.state;
    out << i.step << ',' << fmt(s.t_sim / 3600.0) << ',' << fmt(i.price) << ',' << fmt(i.setpoint) << ','
        << fmt(i.mv.n_mac) << ',' << fmt(i.mv.xi_tur) << ',' << fmt(i.mv.xi_top) << ',' << fmt(i.mv.f_drain) << ','
        << fmt(i.xi_liq) << ',' << fmt(s.n_product) << ',' << fmt(s.i_product) << ',' << fmt(s.dt_irc) << ','
        << fmt(s.n_tank) << ',' << fmt(s.f_tank) << ',' << fmt(i.power.p_comp) << ',' << fmt(i.power.p_liq) << ','
        << fmt(i.power.p_tur) << ',' << fmt(i.reward.total()) << '\n';
  }
}

inline void save_trajectory(const std::string& path, const std::vector<StepInfo>& trace) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_trajectory(out, trace);
}

/// Pearson correlation; 0 when either series has zero variance.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return 0.0;
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Correlation of hourly price with hourly mean net power over complete hours.
inline double price_power_correlation(const std::vector<StepInfo>& trace, double dt) {
  const int per_hour = static_cast<int>(std::lround(3600.0 / dt));
  std::vector<double> price, power;
  for (std::size_t h = 0; (h + 1) * per_hour <= trace.size(); ++h) {
    double p = 0.0;
    for (int k = 0; k < per_hour; ++k) p += trace[h * per_hour + k].power.net();
    price.push_back(trace[h * per_hour].price);
    power.push_back(p / per_hour);
  }
  return pearson(price, power);
}

// ---------------------------------------------------------------------------
// Learning curves

struct LearningRow {
  long step = 0;
  int episode = 0;
  EpisodeMetrics train;
  std::optional<EpisodeMetrics> eval;
};

inline const char* kLearningHeader =
    "step,episode,return,cost,violations,terminal_dev,eval_return,eval_cost,eval_violations,eval_terminal_dev,qp_iters";

inline std::string learning_row_csv(const LearningRow& r) {
  std::ostringstream os;
  os << r.step << ',' << r.episode << ',' << fmt(r.train.ret) << ',' << fmt(r.train.cost) << ',' << r.train.violations
     << ',' << fmt(r.train.terminal_dev) << ',';
  if (r.eval) {
    os << fmt(r.eval->ret) << ',' << fmt(r.eval->cost) << ',' << r.eval->violations << ',' << fmt(r.eval->terminal_dev);
  } else {
    os << ",,,";
  }
  os << ',' << fmt(r.train.qp_iters_mean);
  return os.str();
}

struct CurvePoint {
  long step = 0;
  int episode = 0;
  double ret = 0.0;
  std::optional<double> eval_return;
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<CurvePoint> load_learning_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kLearningHeader) throw Error(ErrorCode::CorruptFile, path + ": bad header");
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    if (cells.size() != 11) throw Error(ErrorCode::CorruptFile, path + ": bad row");
    CurvePoint p;
    p.step = std::stol(cells[0]);
    p.episode = std::stoi(cells[1]);
    p.ret = std::stod(cells[2]);
    if (!cells[6].empty()) p.eval_return = std::stod(cells[6]);
    out.push_back(p);
  }
  return out;
}

/// First step at which the evaluation return reaches first + frac * (best - first).
inline std::optional<long> steps_to_fraction_of_best(const std::vector<CurvePoint>& curve, double frac = 0.95) {
  std::optional<double> first, best;
  for (const auto& p : curve) {
    if (!p.eval_return) continue;
    if (!first) first = *p.eval_return;
    if (!best || *p.eval_return > *best) best = *p.eval_return;
  }
  if (!first) return std::nullopt;
  const double threshold = *first + frac * (*best - *first);
  for (const auto& p : curve) {
    if (p.eval_return && *p.eval_return >= threshold) return p.step;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Run setup

inline std::string arch_dir(const RunConfig& cfg) {
  return (fs::path(cfg.resolved_out_dir()) / to_string(cfg.arch)).string();
}

inline std::string seed_dir(const RunConfig& cfg, std::uint64_t seed) {
  return (fs::path(arch_dir(cfg)) / ("seed_" + std::to_string(seed))).string();
}

/// The identified model for the hierarchical architecture, or nothing for direct.
inline std::optional<LinearModel> model_for(const RunConfig& cfg) {
  if (cfg.arch != Architecture::Hierarchical) return std::nullopt;
  const std::string path = cfg.resolved_model_path();
  if (!fs::exists(path)) {
    throw Error(ErrorCode::ConfigError, "hierarchical runs need an identified model; '" + path +
                                            "' does not exist (run `asuflex sysid` first or set paths.model)");
  }
  LinearModel m = load_model(path);
  m.validate();
  return m;
}

inline PriceProfile eval_profile(const RunConfig& cfg) {
  if (!cfg.eval_profile_path.empty()) return load_profile(cfg.eval_profile_path);
  return synth_profile(cfg.prices.eval_seed, cfg.prices.base, cfg.prices.peak_amp, cfg.prices.noise_frac);
}

inline EpisodeConfig episode_config(const RunConfig& cfg) {
  EpisodeConfig e = cfg.episode;
  e.arch = cfg.arch;
  return e;
}

inline constexpr std::uint64_t kEvalResetSeed = 0;

inline EpisodeMetrics evaluate_policy(AsuEnv& env, const Mlp& actor, int episodes, std::vector<StepInfo>* trace = nullptr) {
  EpisodeMetrics total;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeMetrics m = run_episode(env, actor_policy(actor), kEvalResetSeed + static_cast<std::uint64_t>(e),
                                         e == 0 ? trace : nullptr);
    if (e == 0) {
      total = m;
    } else {
      total.ret += m.ret;
      total.cost += m.cost;
      total.violations += m.violations;
      total.violation_magnitude += m.violation_magnitude;
      total.terminal_dev += m.terminal_dev;
    }
  }
  if (episodes > 1) {
    total.ret /= episodes;
    total.cost /= episodes;
    total.violation_magnitude /= episodes;
    total.terminal_dev /= episodes;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
  std::uint64_t seed = 0;
  std::string dir;
  std::vector<LearningRow> rows;
  double best_eval_return = -std::numeric_limits<double>::infinity();
  long best_step = 0;
};

inline TrainResult train_seed(const RunConfig& cfg, std::uint64_t seed, const std::optional<LinearModel>& model) {
  cfg.validate();
  TrainResult result;
  result.seed = seed;
  result.dir = seed_dir(cfg, seed);
  fs::create_directories(result.dir);
  const std::string curve_path = (fs::path(result.dir) / "learning_curve.csv").string();
  const std::string ckpt_path = (fs::path(result.dir) / "checkpoint_best.json").string();

  const EpisodeConfig ecfg = episode_config(cfg);
  std::optional<PriceProfile> fixed_train;
  if (!cfg.profile_path.empty()) fixed_train = load_profile(cfg.profile_path);
  const std::uint64_t price_seed = seed_for(seed, SeedStream::TrainPrices);
  const std::uint64_t plant_seed = seed_for(seed, SeedStream::Plant);
  const auto train_profile = [&](int episode) {
    if (fixed_train) return *fixed_train;
    return synth_profile(price_seed + static_cast<std::uint64_t>(episode), cfg.prices.base, cfg.prices.peak_amp,
                         cfg.prices.noise_frac);
  };

  AsuEnv env(ecfg, train_profile(0), model);
  AsuEnv eval_env(ecfg, eval_profile(cfg), model);
  DdpgAgent agent(kObservationDim, env.action_dim(), cfg.ddpg, seed_for(seed, SeedStream::Networks));
  ExplorationNoise noise(seed_for(seed, SeedStream::Exploration));
  ReplayBuffer buffer(cfg.ddpg.buffer_capacity, seed_for(seed, SeedStream::Replay));
  std::uniform_real_distribution<double> warmup_draw(-1.0, 1.0);

  std::ofstream curve(curve_path);
  if (!curve) throw Error(ErrorCode::IoError, "cannot write " + curve_path);
  curve << kLearningHeader << '\n';

  long t = 0, last_eval = 0;
  int episode = 0;
  UpdateStats last_stats;
  try {
    while (t < cfg.total_steps) {
      env.set_profile(train_profile(episode));
      Observation obs = env.reset(plant_seed + static_cast<std::uint64_t>(episode));
      EpisodeAccumulator acc;
      bool done = false;
      while (!done && t < cfg.total_steps) {
        Eigen::VectorXd a(env.action_dim());
        if (t < cfg.ddpg.warmup) {
          for (int k = 0; k < a.size(); ++k) a[k] = warmup_draw(noise.engine);
        } else {
          a = explore(agent.act(obs), noise, cfg.ddpg.sigma_at(t, cfg.total_steps));
        }
        const EnvStep s = env.step(a);
        acc.add(s);
        buffer.push(Transition{obs, a, s.reward, s.obs, s.done});
        obs = s.obs;
        done = s.done;
        ++t;
        if (t >= cfg.ddpg.warmup && buffer.size() >= cfg.ddpg.batch) {
          last_stats = agent.update(Batch::from(buffer.sample(cfg.ddpg.batch)));
        }
      }
      ++episode;

      LearningRow row;
      row.step = t;
      row.episode = episode;
      row.train = acc.result();
      if (t - last_eval >= cfg.eval_every || t == cfg.total_steps) {
        last_eval = t;
        row.eval = evaluate_policy(eval_env, agent.actor(), cfg.eval_episodes);
        if (row.eval->ret > result.best_eval_return) {
          result.best_eval_return = row.eval->ret;
          result.best_step = t;
          save_checkpoint(ckpt_path, make_checkpoint(to_string(cfg.arch), agent, t, episode, row.eval->ret, seed,
                                                     detail::engine_state(noise.engine),
                                                     detail::engine_state(buffer.rng())));
        }
      }
      curve << learning_row_csv(row) << '\n' << std::flush;
      result.rows.push_back(std::move(row));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NonFiniteLoss) {
      Json dump{{"error", e.what()},
                {"step", t},
                {"episode", episode},
                {"last_critic_loss", std::isfinite(last_stats.critic_loss) ? Json(last_stats.critic_loss) : Json(nullptr)},
                {"last_actor_loss", std::isfinite(last_stats.actor_loss) ? Json(last_stats.actor_loss) : Json(nullptr)}};
      std::ofstream((fs::path(result.dir) / "diagnostic.json").string()) << dump.dump(1) << '\n';
    }
    throw;
  }
  return result;
}

inline std::vector<TrainResult> train(const RunConfig& cfg) {
  cfg.validate();
  const std::optional<LinearModel> model = model_for(cfg);
  std::vector<TrainResult> out;
  for (std::uint64_t s : cfg.seeds) out.push_back(train_seed(cfg, s, model));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
  std::string arch;
  std::vector<EpisodeMetrics> episodes;
  double mean_return = 0.0;
  double mean_cost = 0.0;
  double mean_violation_magnitude = 0.0;
  int total_violations = 0;
  double mean_terminal_dev = 0.0;
  double price_power_correlation = 0.0;  // first episode
  std::vector<std::vector<StepInfo>> traces;
};

/// Deterministic rollouts of a checkpointed actor on the held-out profile.
inline EvalReport evaluate(const Checkpoint& ckpt, const RunConfig& cfg_in, int n_episodes,
                           const std::string& out_dir = "") {
  if (n_episodes < 1) throw Error(ErrorCode::InvalidArgument, "evaluate: need at least one episode");
  RunConfig cfg = cfg_in;
  cfg.arch = parse_architecture(ckpt.arch);
  const std::optional<LinearModel> model = model_for(cfg);
  AsuEnv env(episode_config(cfg), eval_profile(cfg), model);
  if (ckpt.obs_dim() != kObservationDim || ckpt.act_dim() != env.action_dim()) {
    throw Error(ErrorCode::SchemaMismatch, "checkpoint network dimensions do not match the " + ckpt.arch + " environment");
  }
  EvalReport rep;
  rep.arch = ckpt.arch;
  for (int e = 0; e < n_episodes; ++e) {
    std::vector<StepInfo> trace;
    const EpisodeMetrics m = run_episode(env, actor_policy(ckpt.actor), kEvalResetSeed + static_cast<std::uint64_t>(e), &trace);
    rep.mean_return += m.ret / n_episodes;
    rep.mean_cost += m.cost / n_episodes;
    rep.mean_violation_magnitude += m.violation_magnitude / n_episodes;
    rep.mean_terminal_dev += m.terminal_dev / n_episodes;
    rep.total_violations += m.violations;
    if (e == 0) rep.price_power_correlation = price_power_correlation(trace, cfg.episode.dt);
    if (!out_dir.empty()) {
      save_trajectory((fs::path(out_dir) / ("trajectory_ep" + std::to_string(e) + ".csv")).string(), trace);
    }
    rep.episodes.push_back(m);
    rep.traces.push_back(std::move(trace));
  }
  if (!out_dir.empty()) {
    Json j{{"arch", rep.arch},
           {"episodes", n_episodes},
           {"mean_return", rep.mean_return},
           {"mean_cost", rep.mean_cost},
           {"total_violations", rep.total_violations},
           {"mean_violation_magnitude", rep.mean_violation_magnitude},
           {"mean_terminal_dev", rep.mean_terminal_dev},
           {"price_power_correlation", rep.price_power_correlation}};
    detail::write_json_file((fs::path(out_dir) / "report.json").string(), j);
  }
  return rep;
}

/// Electricity cost recomputed from trajectory CSV columns.
inline double cost_from_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) throw Error(ErrorCode::CorruptFile, path + ": bad header");
  double cost = 0.0, t_prev = 0.0;
  while (std::getline(in, line)) {
    const auto c = split_csv(line);
    if (c.size() != 18) throw Error(ErrorCode::CorruptFile, path + ": bad row");
    const double t_h = std::stod(c[1]);
    cost += std::stod(c[2]) * (std::stod(c[14]) + std::stod(c[15]) - std::stod(c[16])) * (t_h - t_prev);
    t_prev = t_h;
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Open-loop replay and curve export

/// Reads an MV script: header n_mac,xi_tur,xi_top,f_drain and one row per step.
inline std::vector<ManipulatedVars> load_mv_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "n_mac,xi_tur,xi_top,f_drain") {
    throw Error(ErrorCode::ParseError, path + ": expected header n_mac,xi_tur,xi_top,f_drain");
  }
  std::vector<ManipulatedVars> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 4) throw Error(ErrorCode::ParseError, path + ": each row needs 4 values");
    try {
      out.push_back({std::stod(c[0]), std::stod(c[1]), std::stod(c[2]), std::stod(c[3])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, path + ": non-numeric value");
    }
    if (!MvBounds::contains(out.back())) throw Error(ErrorCode::OutOfRange, path + ": MV outside its bounds");
  }
  return out;
}

/// Replays MVs through the direct environment; stops at the script end or episode end.
inline std::vector<StepInfo> simulate(const RunConfig& cfg, const std::vector<ManipulatedVars>& script,
                                      std::uint64_t reset_seed) {
  EpisodeConfig e = cfg.episode;
  e.arch = Architecture::Direct;
  AsuEnv env(e, cfg.profile_path.empty() ? eval_profile(cfg) : load_profile(cfg.profile_path));
  env.reset(reset_seed);
  std::vector<StepInfo> trace;
  for (const auto& mv : script) {
    if (env.done()) break;
    const Eigen::VectorXd a = env.action_spec().to_normalized(mv.as_vector()).cwiseMax(-1.0).cwiseMin(1.0);
    trace.push_back(env.step(a).info);
  }
  return trace;
}

/// Concatenates per-seed learning curves with a leading seed column.
inline void export_curves(const RunConfig& cfg, const std::string& out_path) {
  const fs::path p(out_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
  out << "seed," << kLearningHeader << '\n';
  for (std::uint64_t s : cfg.seeds) {
    const std::string path = (fs::path(seed_dir(cfg, s)) / "learning_curve.csv").string();
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "missing learning curve for seed " + std::to_string(s) + ": " + path);
    std::string line;
    std::getline(in, line);
    if (line != kLearningHeader) throw Error(ErrorCode::CorruptFile, path + ": bad header");
    while (std::getline(in, line)) out << s << ',' << line << '\n';
  }
}

}  // namespace asuflex
