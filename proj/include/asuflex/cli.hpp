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

// Command-line front end. Exit codes: 0 success, 1 runtime error, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "asuflex/config.hpp"
#include "asuflex/harness.hpp"
#include "asuflex/serialization.hpp"
#include "asuflex/sysid.hpp"

namespace asuflex {

inline constexpr const char* kConfigHelp = R"(Config file (JSON, every key optional except "version"):
  version            1
  arch               "direct" | "hier"
  seeds              [1, 2, 3, 4, 5]
  total_steps        10000
  eval_every         96        environment steps between held-out evaluations
  eval_episodes      1
  paths              { profile, eval_profile, model, out_dir, mv_script }
  prices             { base, peak_amp, noise_frac, eval_seed }
  episode            { steps_per_episode, dt, demand, setpoint_lo, setpoint_hi, reset_tank_jitter }
  penalty            { lambda_path, lambda_terminal, t_activate_h, fault_penalty }
  mpc                { horizon, q, r, bias_gain, output_scale, input_scale, qp_tol, qp_max_iter }
  ddpg               { gamma, tau, lr_actor, lr_critic, batch, buffer, warmup, noise_sigma,
                       noise_sigma_final, hidden, reward_scale }
  sysid              { amplitude, duration_s, order, seed, validation_samples, nrmse_threshold,
                       measurement_noise }
The ASUFLEX_OUT environment variable overrides paths.out_dir.
)";

namespace detail {

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::SchemaMismatch:
      return 2;
    default:
      return 1;
  }
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"asuflex: demand-response scheduling for an air separation unit"};
  app.require_subcommand(1);
  app.footer(kConfigHelp);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string arch;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the seed list (train/eval) or the sysid seed");
  };

  CLI::App* sysid = app.add_subcommand("sysid", "run step tests, fit and validate the linear model");
  common(sysid);

  CLI::App* trn = app.add_subcommand("train", "train agents, one run per seed");
  common(trn);
  trn->add_option("--arch", arch, "direct or hier (overrides the config)");

  std::string checkpoint;
  int episodes = 1;
  CLI::App* evl = app.add_subcommand("eval", "roll out a checkpoint on the held-out price day");
  common(evl);
  evl->add_option("--arch", arch, "direct or hier (overrides the config)");
  evl->add_option("--checkpoint", checkpoint, "checkpoint file (default: best checkpoint of the first seed)");
  evl->add_option("--episodes", episodes, "number of evaluation episodes")->check(CLI::PositiveNumber);

  std::string script;
  CLI::App* sim = app.add_subcommand("simulate", "replay an MV script open loop");
  common(sim);
  sim->add_option("--script", script, "CSV with columns n_mac,xi_tur,xi_top,f_drain (default: paths.mv_script)");

  std::string output;
  CLI::App* exp = app.add_subcommand("export-curves", "merge per-seed learning curves into one CSV");
  common(exp);
  exp->add_option("--arch", arch, "direct or hier (overrides the config)");
  exp->add_option("--output", output, "output CSV (default: <out>/<arch>/learning_curves.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << kConfigHelp;
    return 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!arch.empty()) cfg.arch = parse_architecture(arch);
    if (seed && !sysid->parsed()) cfg.seeds = {*seed};
    if (seed && sysid->parsed()) cfg.sysid.seed = *seed;
    cfg.validate();

    if (sysid->parsed()) {
      const SysidResult r = identify_surrogate(cfg.resolved_sysid());
      out << "nrmse (n_product, i_product, dt_irc, f_tank):";
      for (int i = 0; i < r.report.nrmse.size(); ++i) out << ' ' << r.report.nrmse[i];
      out << "\n";
      if (!r.report.pass) {
        err << "sysid: n_product NRMSE " << r.report.nrmse[r.report.gate_output] << " exceeds threshold "
            << r.report.threshold << "; model not written\n";
        return 1;
      }
      const std::string path = cfg.resolved_model_path();
      save_model(path, r.model, &r.report);
      out << "model written to " << path << "\n";
    } else if (trn->parsed()) {
      for (const TrainResult& r : train(cfg)) {
        out << to_string(cfg.arch) << " seed " << r.seed << ": best eval return " << r.best_eval_return << " at step "
            << r.best_step << " (" << r.dir << ")\n";
      }
    } else if (evl->parsed()) {
      const std::string ck_path =
          checkpoint.empty() ? (fs::path(seed_dir(cfg, cfg.seeds.front())) / "checkpoint_best.json").string() : checkpoint;
      if (!fs::exists(ck_path)) throw Error(ErrorCode::ConfigError, "checkpoint not found: " + ck_path);
      const Checkpoint ck = load_checkpoint(ck_path);
      const std::string dir = (fs::path(ck_path).parent_path() / "eval").string();
      const EvalReport r = evaluate(ck, cfg, episodes, dir);
      out << ck.arch << ": return " << r.mean_return << ", cost " << r.mean_cost << " $, violations "
          << r.total_violations << ", terminal deviation " << r.mean_terminal_dev << ", price-power correlation "
          << r.price_power_correlation << "\nartifacts in " << dir << "\n";
    } else if (sim->parsed()) {
      const std::string path = script.empty() ? cfg.mv_script_path : script;
      if (path.empty()) throw Error(ErrorCode::ConfigError, "simulate needs --script or paths.mv_script");
      const auto trace = simulate(cfg, load_mv_script(path), seed_for(cfg.seeds.front(), SeedStream::Plant));
      const std::string dest = (fs::path(cfg.resolved_out_dir()) / "simulate" / "trajectory.csv").string();
      save_trajectory(dest, trace);
      out << trace.size() << " steps written to " << dest << "\n";
    } else if (exp->parsed()) {
      const std::string dest = output.empty() ? (fs::path(arch_dir(cfg)) / "learning_curves.csv").string() : output;
      export_curves(cfg, dest);
      out << "curves written to " << dest << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace asuflex
