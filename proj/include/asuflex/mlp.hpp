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

// Dense tanh multilayer perceptron with hand-written backpropagation and an
// Adam optimizer. Samples are stored column-wise: a batch is (features x B).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "asuflex/error.hpp"

namespace asuflex {

enum class OutputActivation { Linear, Tanh };

struct MlpGradient {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // [0] = input, [l] = output of layer l
  };

  Mlp() = default;

  /// Hidden layers and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the last
  /// layer ~ U(-3e-3, 3e-3) so that initial outputs sit near zero.
  Mlp(std::vector<int> layer_sizes, OutputActivation output, std::mt19937_64& rng)
      : layer_sizes_(std::move(layer_sizes)), output_(output) {
    if (layer_sizes_.size() < 2) throw Error(ErrorCode::InvalidArgument, "mlp: need at least input and output widths");
    for (std::size_t l = 1; l < layer_sizes_.size(); ++l) {
      const int in = layer_sizes_[l - 1], out = layer_sizes_[l];
      const bool last = l + 1 == layer_sizes_.size();
      const double bound = last ? 3e-3 : 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      Eigen::MatrixXd w(out, in);
      for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) w(i, j) = u(rng);
      Eigen::VectorXd b(out);
      for (int i = 0; i < out; ++i) b[i] = u(rng);
      weights_.push_back(std::move(w));
      biases_.push_back(std::move(b));
    }
  }

  /// Network with all parameters zero.
  static Mlp zeros(std::vector<int> layer_sizes, OutputActivation output) {
    Mlp net;
    net.layer_sizes_ = std::move(layer_sizes);
    net.output_ = output;
    for (std::size_t l = 1; l < net.layer_sizes_.size(); ++l) {
      net.weights_.push_back(Eigen::MatrixXd::Zero(net.layer_sizes_[l], net.layer_sizes_[l - 1]));
      net.biases_.push_back(Eigen::VectorXd::Zero(net.layer_sizes_[l]));
    }
    return net;
  }

  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  OutputActivation output_activation() const { return output_; }

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim()) throw Error(ErrorCode::DimensionMismatch, "mlp: input dimension mismatch");
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(x);
    }
    Eigen::MatrixXd a = x;
    for (int l = 0; l < num_layers(); ++l) {
      Eigen::MatrixXd z = weights_[l] * a;
      z.colwise() += biases_[l];
      const bool last = l + 1 == num_layers();
      if (!last || output_ == OutputActivation::Tanh) z = z.array().tanh().matrix();
      a = std::move(z);
      if (cache) cache->activations.push_back(a);
    }
    return a;
  }

  /// Parameter gradient of a scalar loss given dL/d(output) for the cached
  /// forward pass; optionally returns dL/d(input).
  MlpGradient backward(const Cache& cache, const Eigen::MatrixXd& d_output, Eigen::MatrixXd* d_input = nullptr) const {
    MlpGradient g;
    g.dw.resize(weights_.size());
    g.db.resize(biases_.size());
    Eigen::MatrixXd delta = d_output;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const Eigen::MatrixXd& a_out = cache.activations[static_cast<std::size_t>(l + 1)];
      const bool last = l + 1 == num_layers();
      if (!last || output_ == OutputActivation::Tanh) delta = (delta.array() * (1.0 - a_out.array().square())).matrix();
      const Eigen::MatrixXd& a_in = cache.activations[static_cast<std::size_t>(l)];
      g.dw[l] = delta * a_in.transpose();
      g.db[l] = delta.rowwise().sum();
      if (l > 0 || d_input) delta = weights_[l].transpose() * delta;
    }
    if (d_input) *d_input = std::move(delta);
    return g;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < num_layers(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  /// Parameters in layer order, each weight matrix row-major then its bias.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (int l = 0; l < num_layers(); ++l) {
      for (int i = 0; i < weights_[l].rows(); ++i)
        for (int j = 0; j < weights_[l].cols(); ++j) out.push_back(weights_[l](i, j));
      for (int i = 0; i < biases_[l].size(); ++i) out.push_back(biases_[l][i]);
    }
    return out;
  }

  void assign(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "mlp: parameter count mismatch");
    std::size_t k = 0;
    for (int l = 0; l < num_layers(); ++l) {
      for (int i = 0; i < weights_[l].rows(); ++i)
        for (int j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = flat[k++];
      for (int i = 0; i < biases_[l].size(); ++i) biases_[l][i] = flat[k++];
    }
  }

  bool finite() const {
    for (int l = 0; l < num_layers(); ++l) {
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    }
    return true;
  }

  bool operator==(const Mlp& o) const {
    return layer_sizes_ == o.layer_sizes_ && output_ == o.output_ && weights_ == o.weights_ && biases_ == o.biases_;
  }

 private:
  std::vector<int> layer_sizes_;
  OutputActivation output_ = OutputActivation::Linear;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

inline std::vector<double> flatten(const MlpGradient& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.dw.size(); ++l) {
    for (int i = 0; i < g.dw[l].rows(); ++i)
      for (int j = 0; j < g.dw[l].cols(); ++j) out.push_back(g.dw[l](i, j));
    for (int i = 0; i < g.db[l].size(); ++i) out.push_back(g.db[l][i]);
  }
  return out;
}

/// target <- tau * online + (1 - tau) * target
inline void soft_update(Mlp& target, const Mlp& online, double tau) {
  for (int l = 0; l < online.num_layers(); ++l) {
    target.weights()[l] = tau * online.weights()[l] + (1.0 - tau) * target.weights()[l];
    target.biases()[l] = tau * online.biases()[l] + (1.0 - tau) * target.biases()[l];
  }
}

class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  Adam() = default;
  explicit Adam(const Mlp& net) {
    for (int l = 0; l < net.num_layers(); ++l) {
      mw_.push_back(Eigen::MatrixXd::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
      vw_.push_back(mw_.back());
      mb_.push_back(Eigen::VectorXd::Zero(net.biases()[l].size()));
      vb_.push_back(mb_.back());
    }
  }

  /// Descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(Mlp& net, const MlpGradient& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (int l = 0; l < net.num_layers(); ++l) {
      mw_[l] = beta1 * mw_[l] + (1.0 - beta1) * g.dw[l];
      vw_[l] = beta2 * vw_[l] + (1.0 - beta2) * g.dw[l].cwiseAbs2();
      mb_[l] = beta1 * mb_[l] + (1.0 - beta1) * g.db[l];
      vb_[l] = beta2 * vb_[l] + (1.0 - beta2) * g.db[l].cwiseAbs2();
      net.weights()[l].array() -= lr * (mw_[l].array() / c1) / ((vw_[l].array() / c2).sqrt() + eps);
      net.biases()[l].array() -= lr * (mb_[l].array() / c1) / ((vb_[l].array() / c2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }
  void set_steps(long t) { t_ = t; }
  std::vector<Eigen::MatrixXd>& mw() { return mw_; }
  std::vector<Eigen::MatrixXd>& vw() { return vw_; }
  std::vector<Eigen::VectorXd>& mb() { return mb_; }
  std::vector<Eigen::VectorXd>& vb() { return vb_; }
  const std::vector<Eigen::MatrixXd>& mw() const { return mw_; }
  const std::vector<Eigen::MatrixXd>& vw() const { return vw_; }
  const std::vector<Eigen::VectorXd>& mb() const { return mb_; }
  const std::vector<Eigen::VectorXd>& vb() const { return vb_; }

 private:
  std::vector<Eigen::MatrixXd> mw_, vw_;
  std::vector<Eigen::VectorXd> mb_, vb_;
  long t_ = 0;
};

}  // namespace asuflex
