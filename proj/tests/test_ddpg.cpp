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
#include <vector>

#include "asuflex/ddpg.hpp"

namespace asuflex {
namespace {

// Replace every parameter with U(-1, 1) so gradients are well away from zero.
Mlp random_net(std::vector<int> sizes, OutputActivation out, std::mt19937_64& rng) {
  Mlp net(std::move(sizes), out, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> p(net.parameter_count());
  for (auto& v : p) v = u(rng);
  net.assign(p);
  return net;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

Batch random_batch(int obs_dim, int act_dim, int n, std::mt19937_64& rng) {
  Batch b;
  b.obs = random_matrix(obs_dim, n, rng);
  b.actions = random_matrix(act_dim, n, rng);
  b.next_obs = random_matrix(obs_dim, n, rng);
  b.rewards = random_matrix(n, 1, rng).col(0);
  b.dones = Eigen::VectorXd::Zero(n);
  return b;
}

// Central differences of `loss` over every flattened parameter of `net`.
template <class F>
std::vector<double> numeric_gradient(Mlp& net, F loss, double eps = 1e-5) {
  std::vector<double> p = net.flatten();
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + eps;
    net.assign(p);
    const double up = loss();
    p[i] = keep - eps;
    net.assign(p);
    const double down = loss();
    p[i] = keep;
    g[i] = (up - down) / (2.0 * eps);
  }
  net.assign(p);
  return g;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-6});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

TEST(ActorForward, Examples) {
  const Mlp zero = Mlp::zeros({17, 8, 8, 4}, OutputActivation::Tanh);
  const Eigen::VectorXd a = actor_forward(zero, Eigen::VectorXd::Constant(17, 0.7));
  EXPECT_EQ(a, Eigen::VectorXd::Zero(4));

  Mlp single = Mlp::zeros({1, 1}, OutputActivation::Tanh);
  single.weights()[0](0, 0) = 1.0;
  EXPECT_NEAR(actor_forward(single, Eigen::VectorXd::Constant(1, 0.5))[0], 0.46211715726000974, 1e-15);
}

TEST(ActorForward, OutputsBounded) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net = random_net({5, 6, 3}, OutputActivation::Tanh, rng);
    const Eigen::VectorXd a = actor_forward(net, 50.0 * random_matrix(5, 1, rng).col(0));
    EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(ActorForward, DimensionMismatch) {
  const Mlp zero = Mlp::zeros({17, 4, 1}, OutputActivation::Tanh);
  try {
    actor_forward(zero, Eigen::VectorXd::Zero(16));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(CriticForward, Examples) {
  const Mlp zero = Mlp::zeros({18, 8, 8, 1}, OutputActivation::Linear);
  EXPECT_EQ(critic_forward(zero, Eigen::VectorXd::Ones(17), Eigen::VectorXd::Ones(1)), 0.0);
  EXPECT_THROW(critic_forward(zero, Eigen::VectorXd::Ones(17), Eigen::VectorXd::Ones(4)), Error);

  // obs (1, -1), action 0.5; hidden h = tanh(W1 x + b1), q = w2 h + b2.
  // W1 = [[0.5, 0.25, -1], [1, 0, 2]], b1 = (0.1, -0.2), w2 = (2, -1), b2 = 0.3.
  // z1 = 0.5 - 0.25 - 0.5 + 0.1 = -0.15, z2 = 1 + 1 - 0.2 = 1.8
  // q = 2 tanh(-0.15) - tanh(1.8) + 0.3
  Mlp hand = Mlp::zeros({3, 2, 1}, OutputActivation::Linear);
  hand.weights()[0] << 0.5, 0.25, -1.0, 1.0, 0.0, 2.0;
  hand.biases()[0] << 0.1, -0.2;
  hand.weights()[1] << 2.0, -1.0;
  hand.biases()[1] << 0.3;
  const double q = critic_forward(hand, Eigen::Vector2d(1.0, -1.0), Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_NEAR(q, -0.9445760800929042, 1e-14);
}

TEST(CriticForward, FiniteForFiniteInputs) {
  std::mt19937_64 rng(4);
  Mlp net = random_net({7, 5, 1}, OutputActivation::Linear, rng);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = 1e3 * random_matrix(7, 1, rng).col(0);
    EXPECT_TRUE(std::isfinite(critic_forward(net, x.head(5), x.tail(2))));
  }
}

TEST(Bellman, Targets) {
  const Eigen::VectorXd y = bellman_targets(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(0.0, 1.0),
                                            Eigen::Vector2d(2.0, 1e6), 0.99);
  EXPECT_NEAR(y[0], 2.98, 1e-12);
  EXPECT_DOUBLE_EQ(y[1], 1.0);
}

TEST(Gradients, CriticMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int obs_dim = 2 + trial % 3, act_dim = 1 + trial % 2;
    Mlp critic = random_net({obs_dim + act_dim, 4, 3, 1}, OutputActivation::Linear, rng);
    const Batch b = random_batch(obs_dim, act_dim, 5, rng);
    const Eigen::VectorXd targets = random_matrix(5, 1, rng).col(0);
    MlpGradient g;
    critic_loss(critic, b, targets, &g);
    const auto numeric = numeric_gradient(critic, [&] { return critic_loss(critic, b, targets); });
    EXPECT_LT(max_relative_error(flatten(g), numeric), 1e-4) << "trial " << trial;
  }
}

TEST(Gradients, ActorMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int obs_dim = 2 + trial % 3, act_dim = 1 + trial % 2;
    Mlp actor = random_net({obs_dim, 4, 3, act_dim}, OutputActivation::Tanh, rng);
    const Mlp critic = random_net({obs_dim + act_dim, 4, 1}, OutputActivation::Linear, rng);
    const Eigen::MatrixXd obs = random_matrix(obs_dim, 5, rng);
    MlpGradient g;
    actor_loss(actor, critic, obs, &g);
    const auto numeric = numeric_gradient(actor, [&] { return actor_loss(actor, critic, obs); });
    EXPECT_LT(max_relative_error(flatten(g), numeric), 1e-4) << "trial " << trial;
  }
}

TEST(Gradients, CriticStepDecreasesLossAtSmallRate) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Mlp critic = random_net({4, 8, 8, 1}, OutputActivation::Linear, rng);
    const Batch b = random_batch(3, 1, 16, rng);
    const Eigen::VectorXd y = random_matrix(16, 1, rng).col(0);
    MlpGradient g;
    const double before = critic_loss(critic, b, y, &g);
    // Plain gradient step: Adam's first step has unit-magnitude per parameter
    // regardless of lr, so the descent check uses the raw direction.
    std::vector<double> p = critic.flatten();
    const std::vector<double> gf = flatten(g);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= 1e-5 * gf[i];
    critic.assign(p);
    EXPECT_LT(critic_loss(critic, b, y), before);
  }
}

TEST(Gradients, AdamStepDecreasesCriticLoss) {
  std::mt19937_64 rng(14);
  Mlp critic = random_net({4, 8, 8, 1}, OutputActivation::Linear, rng);
  Adam opt(critic);
  const Batch b = random_batch(3, 1, 16, rng);
  const Eigen::VectorXd y = random_matrix(16, 1, rng).col(0);
  MlpGradient g;
  const double before = critic_loss(critic, b, y, &g);
  opt.step(critic, g, 1e-5);
  EXPECT_LT(critic_loss(critic, b, y), before);
}

TEST(SoftUpdate, ContractsTowardOnline) {
  std::mt19937_64 rng(5);
  const Mlp online = random_net({3, 4, 2}, OutputActivation::Tanh, rng);
  Mlp target = random_net({3, 4, 2}, OutputActivation::Tanh, rng);
  const auto p_online = online.flatten();
  const auto before = target.flatten();
  const double tau = 0.005;
  soft_update(target, online, tau);
  const auto after = target.flatten();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_NEAR(after[i] - p_online[i], (1.0 - tau) * (before[i] - p_online[i]), 1e-15);
  }
  soft_update(target, online, 1.0);
  EXPECT_EQ(target.flatten(), p_online);
}

Transition make_transition(double tag) {
  Transition t;
  t.obs = Eigen::VectorXd::Constant(17, tag);
  t.action = Eigen::VectorXd::Constant(1, 0.0);
  t.reward = tag;
  t.next_obs = Eigen::VectorXd::Constant(17, tag + 1.0);
  return t;
}

TEST(ReplayBuffer, PushSample) {
  ReplayBuffer buf(4, 1);
  buf.push(make_transition(7.0));
  const auto s = buf.sample(1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].reward, 7.0);
}

TEST(ReplayBuffer, EvictsOldestWhenFull) {
  ReplayBuffer buf(3, 1);
  for (int i = 0; i < 4; ++i) buf.push(make_transition(i));
  EXPECT_EQ(buf.size(), 3);
  for (const auto& t : buf.items()) EXPECT_NE(t.reward, 0.0);
  for (const auto& t : buf.sample(200)) EXPECT_NE(t.reward, 0.0);
}

TEST(ReplayBuffer, EmptySampleThrows) {
  ReplayBuffer buf(3, 1);
  try {
    buf.sample(1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBuffer);
  }
}

TEST(ReplayBuffer, SameSeedSameStream) {
  ReplayBuffer a(10, 99), b(10, 99);
  for (int i = 0; i < 10; ++i) {
    a.push(make_transition(i));
    b.push(make_transition(i));
  }
  for (int k = 0; k < 5; ++k) {
    const auto sa = a.sample(8), sb = b.sample(8);
    for (int i = 0; i < 8; ++i) EXPECT_EQ(sa[i].reward, sb[i].reward);
  }
}

TEST(ReplayBuffer, SamplingCoversAllItems) {
  ReplayBuffer buf(5, 2);
  for (int i = 0; i < 5; ++i) buf.push(make_transition(i));
  std::vector<int> counts(5, 0);
  for (const auto& t : buf.sample(5000)) ++counts[static_cast<int>(t.reward)];
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

TEST(Explore, Examples) {
  ExplorationNoise noise(1);
  const Eigen::Vector4d a(0.1, -0.2, 0.3, 0.9);
  EXPECT_EQ(explore(a, noise, 0.0), Eigen::VectorXd(a));
  for (int i = 0; i < 100; ++i) EXPECT_LE(explore(a, noise, 2.0).cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW(explore(a, noise, -0.1), Error);

  ExplorationNoise n1(42), n2(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(explore(a, n1, 0.1), explore(a, n2, 0.1));
}

TEST(Hyper, SigmaScheduleAndValidation) {
  DdpgHyper h;
  EXPECT_DOUBLE_EQ(h.sigma_at(0, 10000), 0.1);
  EXPECT_NEAR(h.sigma_at(9999, 10000), 0.02, 1e-15);
  EXPECT_NO_THROW(h.validate());
  h.gamma = 1.5;
  EXPECT_THROW(h.validate(), Error);
  h = DdpgHyper{};
  h.tau = 0.0;
  EXPECT_THROW(h.validate(), Error);
}

TEST(DdpgAgent, UpdateIsDeterministicAndFinite) {
  DdpgHyper h;
  h.batch = 8;
  h.hidden = {6, 6};
  std::mt19937_64 rng(21);
  const Batch b = random_batch(17, 1, 8, rng);
  DdpgAgent a(17, 1, h, 5), c(17, 1, h, 5);
  for (int i = 0; i < 5; ++i) {
    const UpdateStats sa = a.update(b), sc = c.update(b);
    EXPECT_EQ(sa.critic_loss, sc.critic_loss);
    EXPECT_EQ(sa.actor_loss, sc.actor_loss);
    EXPECT_TRUE(std::isfinite(sa.critic_loss));
  }
  EXPECT_EQ(a.actor(), c.actor());
  EXPECT_EQ(a.critic_target(), c.critic_target());
  EXPECT_FALSE(a.actor_target() == a.actor());
}

TEST(DdpgAgent, RejectsWrongBatchSizeAndNonFinite) {
  DdpgHyper h;
  h.batch = 4;
  h.hidden = {3};
  DdpgAgent agent(2, 1, h, 1);
  std::mt19937_64 rng(1);
  EXPECT_THROW(agent.update(random_batch(2, 1, 3, rng)), Error);
  Batch bad = random_batch(2, 1, 4, rng);
  bad.rewards[0] = std::nan("");
  try {
    agent.update(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
}

TEST(DdpgAgent, LearnsConstantRewardValue) {
  // With done = 1 everywhere the critic regresses onto scale * r.
  DdpgHyper h;
  h.batch = 16;
  h.hidden = {8};
  h.reward_scale = 1.0;
  DdpgAgent agent(2, 1, h, 3);
  std::mt19937_64 rng(2);
  Batch b = random_batch(2, 1, 16, rng);
  b.rewards.setConstant(0.5);
  b.dones.setOnes();
  double loss = 0.0;
  for (int i = 0; i < 2000; ++i) loss = agent.update(b).critic_loss;
  EXPECT_LT(loss, 1e-4);
}

}  // namespace
}  // namespace asuflex
