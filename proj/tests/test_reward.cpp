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

#include <random>
#include <vector>

#include "asuflex/reward.hpp"

namespace asuflex {
namespace {

const PowerBreakdown kExamplePower{0.30, 0.05, 0.02};

TEST(ElecReward, Examples) {
  EXPECT_NEAR(elec_reward(50.0, kExamplePower, 0.25), -4.125, 1e-12);
  EXPECT_DOUBLE_EQ(elec_reward(0.0, kExamplePower, 0.25), 0.0);
  EXPECT_DOUBLE_EQ(elec_reward(50.0, PowerBreakdown{0.3, 0.1, 0.4}, 0.25), 0.0);
}

TEST(PathPenalty, Examples) {
  EXPECT_NEAR(path_penalty(100.0 / 1500.0, 10.0), -0.6667, 1e-4);
  EXPECT_DOUBLE_EQ(path_penalty(-0.5, 10.0), 0.0);
  EXPECT_DOUBLE_EQ(path_penalty(0.0, 10.0), 0.0);
}

TEST(TerminalPenalty, Examples) {
  PenaltyConfig cfg;
  cfg.lambda_term = 100.0;
  cfg.t_activate = 18.0;
  EXPECT_NEAR(terminal_penalty(0.1, 20.0, cfg), -1.0, 1e-12);
  EXPECT_DOUBLE_EQ(terminal_penalty(0.1, 12.0, cfg), 0.0);
  EXPECT_DOUBLE_EQ(terminal_penalty(0.0, 20.0, cfg), 0.0);
  EXPECT_DOUBLE_EQ(terminal_penalty(-0.1, 20.0, cfg), terminal_penalty(0.1, 20.0, cfg));
  EXPECT_DOUBLE_EQ(terminal_penalty(0.1, 18.0, cfg), 0.0);
}

TEST(TotalReward, Composition) {
  PenaltyConfig cfg;
  cfg.lambda_term = 100.0;
  const std::vector<double> satisfied{-0.1, -0.2, -0.3};
  EXPECT_DOUBLE_EQ(total_reward(50.0, kExamplePower, 0.25, satisfied, 0.1, 12.0, cfg, false),
                   elec_reward(50.0, kExamplePower, 0.25));

  const std::vector<double> g{100.0 / 1500.0, -0.2};
  EXPECT_NEAR(total_reward(50.0, kExamplePower, 0.25, g, 0.1, 20.0, cfg, false), -5.792, 1e-3);

  EXPECT_DOUBLE_EQ(total_reward(0.0, kExamplePower, 0.25, satisfied, 0.0, 20.0, cfg, true), -50.0);
}

TEST(PenaltyConfig, Validation) {
  PenaltyConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.t_activate = 24.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.lambda_path = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(RewardProperties, PenaltiesNonPositiveAndScaleLinearly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> g(7);
    for (auto& gi : g) gi = u(rng);
    const double h = u(rng);
    const double t = 12.0 + 12.0 * std::abs(u(rng));
    const double price = 50.0 + 40.0 * u(rng);
    PenaltyConfig cfg;
    const auto base = reward_terms(price, kExamplePower, 0.25, g, h, t, cfg, false);
    EXPECT_LE(base.path, 0.0);
    EXPECT_LE(base.terminal, 0.0);
    EXPECT_LE(base.total(), base.elec);

    PenaltyConfig scaled = cfg;
    const double c = 0.5 + 3.0 * std::abs(u(rng));
    scaled.lambda_path *= c;
    scaled.lambda_term *= c;
    scaled.fault_penalty *= c;
    const auto s = reward_terms(price, kExamplePower, 0.25, g, h, t, scaled, true);
    const auto b = reward_terms(price, kExamplePower, 0.25, g, h, t, cfg, true);
    EXPECT_NEAR(s.path + s.terminal + s.fault, c * (b.path + b.terminal + b.fault), 1e-9);

    // Dropping a satisfied entry leaves the reward unchanged.
    std::vector<double> with_extra = g;
    with_extra.push_back(-0.3);
    EXPECT_DOUBLE_EQ(total_reward(price, kExamplePower, 0.25, with_extra, h, t, cfg, false),
                     total_reward(price, kExamplePower, 0.25, g, h, t, cfg, false));
  }
}

TEST(RewardProperties, PathPenaltyContinuousAtZero) {
  EXPECT_NEAR(path_penalty(1e-12, 10.0), 0.0, 1e-10);
  EXPECT_NEAR(path_penalty(-1e-12, 10.0), 0.0, 1e-10);
}

}  // namespace
}  // namespace asuflex
