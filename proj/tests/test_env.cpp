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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "asuflex/env.hpp"

namespace asuflex {
namespace {

const LinearModel& identified() {
  static const LinearModel model = identify_surrogate(SysidConfig{}).model;
  return model;
}

EpisodeConfig config(Architecture arch) {
  EpisodeConfig cfg;
  cfg.arch = arch;
  return cfg;
}

AsuEnv direct_env() { return AsuEnv(config(Architecture::Direct), synth_profile(1, 50.0, 30.0)); }
AsuEnv hier_env() { return AsuEnv(config(Architecture::Hierarchical), synth_profile(1, 50.0, 30.0), identified()); }

TEST(ActionSpec, MapsCenterAndCorners) {
  const ActionSpec d = ActionSpec::direct();
  const Eigen::VectorXd mid = d.to_physical(Eigen::VectorXd::Zero(4));
  EXPECT_NEAR(mid[0], 40.0, 1e-12);
  EXPECT_NEAR(mid[1], 0.05, 1e-12);
  EXPECT_NEAR(mid[2], 0.525, 1e-12);
  EXPECT_NEAR(mid[3], 1.0, 1e-12);
  EXPECT_EQ(d.to_physical(Eigen::VectorXd::Ones(4)), Eigen::VectorXd(MvBounds::upper()));
  EXPECT_EQ(d.to_physical(-Eigen::VectorXd::Ones(4)), Eigen::VectorXd(MvBounds::lower()));
  EXPECT_NEAR(ActionSpec::hierarchical().to_physical(Eigen::VectorXd::Zero(1))[0], 22.5, 1e-12);
}

TEST(ActionSpec, BijectiveAndMonotone) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const ActionSpec d = ActionSpec::direct();
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd a(4), b(4);
    for (int k = 0; k < 4; ++k) {
      a[k] = u(rng);
      b[k] = u(rng);
    }
    EXPECT_LT((d.to_normalized(d.to_physical(a)) - a).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::VectorXd pa = d.to_physical(a), pb = d.to_physical(b);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(a[k] < b[k], pa[k] < pb[k]);
  }
}

TEST(AsuEnv, ResetIsDeterministicAtMidLevel) {
  AsuEnv env = direct_env();
  const Observation o1 = env.reset(3);
  const Observation o2 = env.reset(3);
  EXPECT_EQ(o1, o2);
  EXPECT_EQ(o1.size(), 17);
  EXPECT_DOUBLE_EQ(o1[2], 0.0);
  EXPECT_DOUBLE_EQ(o1[16], 0.0);
}

TEST(AsuEnv, DimensionsChecked) {
  EXPECT_EQ(direct_env().action_dim(), 4);
  EXPECT_EQ(hier_env().action_dim(), 1);
  AsuEnv env = direct_env();
  env.reset(0);
  EXPECT_THROW(env.step(Eigen::VectorXd::Zero(1)), Error);
  EXPECT_THROW(env.step(Eigen::VectorXd::Constant(4, 1.5)), Error);
  try {
    AsuEnv bad(config(Architecture::Hierarchical), synth_profile(1, 50.0, 30.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
  EpisodeConfig short_cfg = config(Architecture::Direct);
  short_cfg.steps_per_episode = 95;
  EXPECT_THROW(AsuEnv(short_cfg, synth_profile(1, 50.0, 30.0)), Error);
}

TEST(AsuEnv, DirectZeroActionAppliesMidpoints) {
  AsuEnv env = direct_env();
  env.reset(0);
  const EnvStep s = env.step(Eigen::VectorXd::Zero(4));
  EXPECT_NEAR(s.info.mv.n_mac, 40.0, 1e-12);
  EXPECT_NEAR(s.info.mv.f_drain, 1.0, 1e-12);
  EXPECT_TRUE(std::isnan(s.info.setpoint));
  EXPECT_EQ(s.info.step, 1);
  EXPECT_DOUBLE_EQ(s.info.state.t_sim, 900.0);
}

TEST(AsuEnv, DoneExactlyAtStep96ThenEpisodeFinished) {
  AsuEnv env = direct_env();
  env.reset(0);
  for (int i = 1; i <= 96; ++i) {
    const EnvStep s = env.step(Eigen::VectorXd::Zero(4));
    EXPECT_EQ(s.done, i == 96) << "step " << i;
    EXPECT_TRUE(s.obs.allFinite());
  }
  try {
    env.step(Eigen::VectorXd::Zero(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EpisodeFinished);
  }
}

TEST(AsuEnv, HierZeroActionIsMidSetpoint) {
  AsuEnv env = hier_env();
  env.reset(0);
  const EnvStep s = env.step(Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(s.info.setpoint, 22.5, 1e-12);
  EXPECT_GT(s.info.qp_iterations, 0);
  EXPECT_TRUE(MvBounds::contains(s.info.mv));
}

TEST(AsuEnv, HierNominalSetpointKeepsPathConstraints) {
  AsuEnv env = hier_env();
  env.reset(0);
  const double nominal = steady_outputs(PlantParams{}.nominal, PlantParams{}).n_product;
  const Eigen::VectorXd a = env.action_spec().to_normalized(Eigen::VectorXd::Constant(1, nominal));
  bool done = false;
  while (!done) {
    const EnvStep s = env.step(a);
    for (double g : s.info.g) EXPECT_LE(g, 0.0) << "step " << s.info.step;
    EXPECT_FALSE(s.info.fault);
    done = s.done;
  }
  EXPECT_EQ(env.steps_taken(), 96);
}

TEST(AsuEnv, RewardSharedAcrossArchitectures) {
  AsuEnv hier = hier_env();
  AsuEnv direct = direct_env();
  hier.reset(0);
  direct.reset(0);
  for (int i = 0; i < 10; ++i) {
    const double a = 0.3 * std::sin(0.7 * i);
    const EnvStep hs = hier.step(Eigen::VectorXd::Constant(1, a));
    const RewardBreakdown r = interval_reward(hs.info.state, hs.info.mv, hs.info.price, hier.config(), hs.info.fault);
    EXPECT_EQ(r.total(), hs.reward);

    // Replaying the realized MVs through the direct environment reproduces the reward.
    const EnvStep ds = direct.step(direct.action_spec().to_normalized(hs.info.mv.as_vector()).cwiseMax(-1.0).cwiseMin(1.0));
    EXPECT_NEAR(ds.reward, hs.reward, 1e-9 * std::max(1.0, std::abs(hs.reward)));
  }
}

TEST(AsuEnv, ReturnIsSumOfStepRewards) {
  AsuEnv env = direct_env();
  env.reset(1);
  double ret = 0.0, parts = 0.0;
  bool done = false;
  int i = 0;
  while (!done) {
    const EnvStep s = env.step(Eigen::VectorXd::Constant(4, 0.2 * std::cos(0.3 * i++)));
    ret += s.reward;
    parts += s.info.reward.elec + s.info.reward.path + s.info.reward.terminal + s.info.reward.fault;
    done = s.done;
  }
  EXPECT_NEAR(ret, parts, 1e-9 * std::abs(ret));
}

TEST(AsuEnv, TankEmptyEndsEpisodeWithFault) {
  AsuEnv env = direct_env();
  PlantStateOverrides o;
  o.n_tank = 1000.0;
  env.reset(0, o);
  // Minimum feed air: production falls below demand and the tank drains.
  Eigen::VectorXd a = Eigen::VectorXd::Zero(4);
  a[0] = -1.0;
  EnvStep s;
  do {
    s = env.step(a);
  } while (!s.done);
  EXPECT_TRUE(s.info.fault);
  EXPECT_LT(env.steps_taken(), 96);
  EXPECT_DOUBLE_EQ(s.info.reward.fault, -50.0);
}

TEST(AsuEnv, TerminalPenaltyOnlyAfterActivation) {
  AsuEnv env = direct_env();
  PlantStateOverrides o;
  o.n_tank = 1.5e6;
  env.reset(0, o);
  bool done = false;
  while (!done) {
    const EnvStep s = env.step(Eigen::VectorXd::Zero(4));
    if (s.info.state.t_sim <= 18.0 * 3600.0) {
      EXPECT_EQ(s.info.reward.terminal, 0.0) << "step " << s.info.step;
    } else {
      EXPECT_LT(s.info.reward.terminal, 0.0) << "step " << s.info.step;
    }
    done = s.done;
  }
}

}  // namespace
}  // namespace asuflex
