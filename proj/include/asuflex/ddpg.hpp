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

// Deep deterministic policy gradient: actor/critic MLPs with target copies,
// uniform replay, Gaussian exploration and Adam updates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asuflex/error.hpp"
#include "asuflex/mlp.hpp"

namespace asuflex {

struct DdpgHyper {
  double gamma = 0.99;
  double tau = 0.005;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  int batch = 128;
  double noise_sigma = 0.1;        // initial exploration std-dev in normalized action units
  double noise_sigma_final = 0.02; // reached linearly at the end of the step budget
  int warmup = 500;
  int buffer_capacity = 20000;
  std::vector<int> hidden{64, 64};
  double reward_scale = 0.01;      // rewards are multiplied by this inside the Bellman target

  void validate() const {
    const bool ok = gamma >= 0.0 && gamma <= 1.0 && tau > 0.0 && tau <= 1.0 && lr_actor > 0.0 && lr_critic > 0.0 &&
                    batch > 0 && noise_sigma >= 0.0 && noise_sigma_final >= 0.0 && warmup >= 0 && buffer_capacity > 0 &&
                    !hidden.empty() && reward_scale > 0.0;
    if (!ok) throw Error(ErrorCode::ConfigError, "ddpg: invalid hyperparameters");
    for (int w : hidden) {
      if (w <= 0) throw Error(ErrorCode::ConfigError, "ddpg: hidden widths must be positive");
    }
  }

  /// Exploration scale after `step` of `total` environment steps.
  double sigma_at(long step, long total) const {
    if (total <= 1) return noise_sigma;
    const double frac = std::clamp(static_cast<double>(step) / static_cast<double>(total - 1), 0.0, 1.0);
    return noise_sigma + frac * (noise_sigma_final - noise_sigma);
  }
};

struct Transition {
  Eigen::VectorXd obs;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_obs;
  bool done = false;
};

/// Column-stacked minibatch.
struct Batch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_obs;
  Eigen::VectorXd dones;

  int size() const { return static_cast<int>(rewards.size()); }

  static Batch from(const std::vector<Transition>& ts) {
    if (ts.empty()) throw Error(ErrorCode::InvalidArgument, "batch: empty");
    const auto n = static_cast<int>(ts.size());
    const auto d = ts.front().obs.size(), m = ts.front().action.size();
    Batch b;
    b.obs.resize(d, n);
    b.actions.resize(m, n);
    b.next_obs.resize(d, n);
    b.rewards.resize(n);
    b.dones.resize(n);
    for (int i = 0; i < n; ++i) {
      const auto& t = ts[static_cast<std::size_t>(i)];
      if (t.obs.size() != d || t.next_obs.size() != d || t.action.size() != m) {
        throw Error(ErrorCode::DimensionMismatch, "batch: transitions have inconsistent dimensions");
      }
      b.obs.col(i) = t.obs;
      b.actions.col(i) = t.action;
      b.next_obs.col(i) = t.next_obs;
      b.rewards[i] = t.reward;
      b.dones[i] = t.done ? 1.0 : 0.0;
    }
    return b;
  }
};

/// Fixed-capacity ring buffer with seeded uniform sampling (with replacement).
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity <= 0) throw Error(ErrorCode::InvalidArgument, "replay buffer: capacity must be positive");
    items_.reserve(static_cast<std::size_t>(capacity));
  }

  void push(Transition t) {
    if (static_cast<int>(items_.size()) < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[static_cast<std::size_t>(next_)] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::vector<Transition> sample(int n) {
    if (items_.empty()) throw Error(ErrorCode::EmptyBuffer, "replay buffer: sample before any push");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<Transition> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(items_[pick(rng_)]);
    return out;
  }

  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }
  const std::vector<Transition>& items() const { return items_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  int capacity_;
  int next_ = 0;
  std::vector<Transition> items_;
  std::mt19937_64 rng_;
};

/// Seeded Gaussian exploration source.
struct ExplorationNoise {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};

  explicit ExplorationNoise(std::uint64_t seed = 0) : engine(seed) {}
};

/// action + sigma * N(0, I), clipped to [-1, 1]. sigma = 0 draws nothing.
inline Eigen::VectorXd explore(const Eigen::VectorXd& action, ExplorationNoise& noise, double sigma) {
  if (sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "explore: sigma must be >= 0");
  if (sigma == 0.0) return action;
  Eigen::VectorXd out = action;
  for (int i = 0; i < out.size(); ++i) out[i] += sigma * noise.normal(noise.engine);
  return out.cwiseMax(-1.0).cwiseMin(1.0);
}

inline Eigen::VectorXd actor_forward(const Mlp& actor, const Eigen::VectorXd& obs) {
  if (obs.size() != actor.input_dim()) throw Error(ErrorCode::DimensionMismatch, "actor: observation dimension mismatch");
  return actor.forward(obs).col(0);
}

inline double critic_forward(const Mlp& critic, const Eigen::VectorXd& obs, const Eigen::VectorXd& action) {
  if (obs.size() + action.size() != critic.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "critic: observation + action dimension mismatch");
  }
  Eigen::VectorXd in(obs.size() + action.size());
  in << obs, action;
  return critic.forward(in)(0, 0);
}

/// y = scale * r + gamma * (1 - done) * Q'(s', mu'(s'))
inline Eigen::VectorXd bellman_targets(const Eigen::VectorXd& rewards, const Eigen::VectorXd& dones,
                                       const Eigen::VectorXd& q_next, double gamma, double reward_scale = 1.0) {
  return (reward_scale * rewards.array() + gamma * (1.0 - dones.array()) * q_next.array()).matrix();
}

inline Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

/// Mean squared TD error and its parameter gradient.
inline double critic_loss(const Mlp& critic, const Batch& batch, const Eigen::VectorXd& targets,
                          MlpGradient* grad = nullptr) {
  Mlp::Cache cache;
  const Eigen::MatrixXd q = critic.forward(stack_rows(batch.obs, batch.actions), grad ? &cache : nullptr);
  const Eigen::RowVectorXd err = q.row(0) - targets.transpose();
  const double n = static_cast<double>(batch.size());
  if (grad) *grad = critic.backward(cache, (2.0 / n) * err);
  return err.squaredNorm() / n;
}

/// -mean Q(s, mu(s)); the gradient flows through the critic's action input
/// into the actor parameters (deterministic policy gradient).
inline double actor_loss(const Mlp& actor, const Mlp& critic, const Eigen::MatrixXd& obs, MlpGradient* grad = nullptr) {
  Mlp::Cache actor_cache, critic_cache;
  const Eigen::MatrixXd act = actor.forward(obs, grad ? &actor_cache : nullptr);
  const Eigen::MatrixXd q = critic.forward(stack_rows(obs, act), grad ? &critic_cache : nullptr);
  const double n = static_cast<double>(obs.cols());
  if (grad) {
    Eigen::MatrixXd d_in;
    critic.backward(critic_cache, Eigen::RowVectorXd::Constant(obs.cols(), -1.0 / n), &d_in);
    *grad = actor.backward(actor_cache, d_in.bottomRows(act.rows()));
  }
  return -q.sum() / n;
}

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

class DdpgAgent {
 public:
  DdpgAgent(int obs_dim, int act_dim, DdpgHyper hyper, std::uint64_t seed) : hyper_(std::move(hyper)) {
    hyper_.validate();
    std::mt19937_64 rng(seed);
    std::vector<int> a_sizes{obs_dim}, c_sizes{obs_dim + act_dim};
    for (int w : hyper_.hidden) {
      a_sizes.push_back(w);
      c_sizes.push_back(w);
    }
    a_sizes.push_back(act_dim);
    c_sizes.push_back(1);
    actor_ = Mlp(a_sizes, OutputActivation::Tanh, rng);
    critic_ = Mlp(c_sizes, OutputActivation::Linear, rng);
    actor_target_ = actor_;
    critic_target_ = critic_;
    actor_opt_ = Adam(actor_);
    critic_opt_ = Adam(critic_);
  }

  Eigen::VectorXd act(const Eigen::VectorXd& obs) const { return actor_forward(actor_, obs); }

  /// One critic step, one actor step, then soft target updates.
  UpdateStats update(const Batch& batch) {
    if (batch.size() != hyper_.batch) throw Error(ErrorCode::InvalidArgument, "ddpg update: batch size mismatch");
    const Eigen::MatrixXd next_act = actor_target_.forward(batch.next_obs);
    const Eigen::VectorXd q_next = critic_target_.forward(stack_rows(batch.next_obs, next_act)).row(0).transpose();
    const Eigen::VectorXd y = bellman_targets(batch.rewards, batch.dones, q_next, hyper_.gamma, hyper_.reward_scale);

    UpdateStats stats;
    MlpGradient g;
    stats.critic_loss = critic_loss(critic_, batch, y, &g);
    if (!std::isfinite(stats.critic_loss)) throw Error(ErrorCode::NonFiniteLoss, "ddpg: critic loss is not finite");
    critic_opt_.step(critic_, g, hyper_.lr_critic);

    stats.actor_loss = actor_loss(actor_, critic_, batch.obs, &g);
    if (!std::isfinite(stats.actor_loss)) throw Error(ErrorCode::NonFiniteLoss, "ddpg: actor loss is not finite");
    actor_opt_.step(actor_, g, hyper_.lr_actor);

    soft_update(critic_target_, critic_, hyper_.tau);
    soft_update(actor_target_, actor_, hyper_.tau);
    if (!actor_.finite() || !critic_.finite()) throw Error(ErrorCode::NonFiniteLoss, "ddpg: parameters became non-finite");
    return stats;
  }

  const DdpgHyper& hyper() const { return hyper_; }
  Mlp& actor() { return actor_; }
  Mlp& critic() { return critic_; }
  Mlp& actor_target() { return actor_target_; }
  Mlp& critic_target() { return critic_target_; }
  Adam& actor_opt() { return actor_opt_; }
  Adam& critic_opt() { return critic_opt_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& actor_target() const { return actor_target_; }
  const Mlp& critic_target() const { return critic_target_; }
  const Adam& actor_opt() const { return actor_opt_; }
  const Adam& critic_opt() const { return critic_opt_; }

 private:
  DdpgHyper hyper_;
  Mlp actor_, critic_, actor_target_, critic_target_;
  Adam actor_opt_, critic_opt_;
};

}  // namespace asuflex
