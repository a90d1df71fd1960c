/*
 * Copyright 2026 The gmh Authors
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

#include <cmath>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <sstream>

#include "gmh/core.hpp"
#include "gmh/log.hpp"
#include "gmh/mappings.hpp"

namespace gmh {

/// Symmetric increment generator V ~ q(V), independent of theta.
using IncrementSampler = std::function<Vector(RngStream&)>;

/// Random-walk Metropolis: V ~ N(0, C) (or a user-supplied symmetric law),
/// translation map, acceptance min{1, pi(xi)/pi(theta)}.
class RandomWalkMetropolis {
 public:
  explicit RandomWalkMetropolis(const Matrix& proposal_covariance)
      : lower_(cholesky_spd(proposal_covariance).lower) {}

  // constrained so Eigen expressions pick the covariance overload
  template <class F>
    requires(!std::is_base_of_v<Eigen::EigenBase<F>, F> && std::is_invocable_r_v<Vector, F&, RngStream&>)
  explicit RandomWalkMetropolis(F increment) : increment_(std::move(increment)) {
    if (!increment_) throw ConfigError("RandomWalkMetropolis: empty increment sampler");
  }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const Vector v = draw(state.position.size(), rng);
    const ExtendedPoint mapped = TranslationMap{}.apply({state.position, v});
    const double lp = target(mapped.theta);
    const double u = rng.uniform();
    const double log_alpha = log_acceptance_probability(state.log_density, lp, 0.0);
    const bool accept = generalized_accept(state.log_density, lp, 0.0, u);
    if (accept) {
      state.position = mapped.theta;
      state.log_density = lp;
    }
    return {accept, 1, log_alpha};
  }

 private:
  Vector draw(Index n, RngStream& rng) const {
    if (increment_) {
      Vector v = increment_(rng);
      if (v.size() != n) throw ConfigError("RandomWalkMetropolis: increment has wrong dimension");
      return v;
    }
    if (lower_.rows() != n) throw ConfigError("RandomWalkMetropolis: proposal dimension mismatch");
    return lower_.triangularView<Eigen::Lower>() * standard_normal(n, rng);
  }

  Matrix lower_;
  IncrementSampler increment_;
};

/// Slice formulation of the Metropolis step without recursive proposals:
/// log h = log pi(theta) + log u, accept xi iff log pi(xi) >= log h.
/// Consumes random numbers in the same order as RandomWalkMetropolis.
class NonRecursiveSlice {
 public:
  explicit NonRecursiveSlice(const Matrix& proposal_covariance)
      : lower_(cholesky_spd(proposal_covariance).lower) {}

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const Index n = state.position.size();
    if (lower_.rows() != n) throw ConfigError("NonRecursiveSlice: proposal dimension mismatch");
    const Vector v = lower_.triangularView<Eigen::Lower>() * standard_normal(n, rng);
    const Vector xi = state.position + v;
    const double lp = target(xi);
    const double log_h = state.log_density + std::log(rng.uniform());
    const double log_alpha = log_acceptance_probability(state.log_density, lp, 0.0);
    const bool accept = lp >= log_h;
    if (accept) {
      state.position = xi;
      state.log_density = lp;
    }
    return {accept, 1, log_alpha};
  }

 private:
  Matrix lower_;
};

/// Adaptive state kept in ChainState::scratch by AdaptiveMetropolis.
struct AdaptiveMetropolisState {
  Vector running_mean;
  Matrix scatter;  // sum of outer products of deviations from the running mean
  double log_scale = 0.0;
  double target_rate = 0.44;
  std::uint64_t sample_count = 0;
  std::uint64_t steps = 0;
  double mean_acceptance = 0.0;

  /// (1/k) sum (theta_i - mean)(theta_i - mean)^T
  Matrix running_covariance() const {
    if (sample_count == 0) return Matrix::Zero(scatter.rows(), scatter.cols());
    return scatter / static_cast<double>(sample_count);
  }

  /// Welford update with one more sample.
  void add_sample(const Vector& theta) {
    if (sample_count == 0) {
      running_mean = Vector::Zero(theta.size());
      scatter = Matrix::Zero(theta.size(), theta.size());
    }
    ++sample_count;
    const Vector delta = theta - running_mean;
    running_mean += delta / static_cast<double>(sample_count);
    scatter += delta * (theta - running_mean).transpose();
  }
};

struct AdaptiveMetropolisConfig {
  double target_rate = 0.0;            // 0 selects 0.44 in one dimension, 0.234 otherwise
  double initial_scale = 0.0;          // s; 0 selects 2.38^2 / n
  std::uint64_t covariance_warmup = 100;  // use the initial covariance until this many samples
  std::uint64_t freeze_after = 0;      // stop adapting after this many steps; 0 = never
  double learning_exponent = 0.6;      // eta_k = k^-exponent
  double regularization = 1e-8;        // times trace/n, added to the diagonal
  Matrix initial_covariance{};         // empty selects the identity
};

/// Random-walk Metropolis with V ~ N(0, s Sigma_k), Sigma_k the running
/// covariance of the chain, and Robbins-Monro control of log s towards a
/// target acceptance rate.
class AdaptiveMetropolis {
 public:
  AdaptiveMetropolis(Index dimension, AdaptiveMetropolisConfig config = {}) : n_(dimension), config_(std::move(config)) {
    if (n_ < 1) throw ConfigError("AdaptiveMetropolis: dimension must be positive");
    if (config_.target_rate == 0.0) config_.target_rate = n_ == 1 ? 0.44 : 0.234;
    if (!(config_.target_rate > 0.0 && config_.target_rate < 1.0))
      throw ConfigError("AdaptiveMetropolis: target rate must lie in (0, 1)");
    if (config_.target_rate < 0.15 || config_.target_rate > 0.5) {
      std::ostringstream msg;
      msg << "adaptive Metropolis target rate " << config_.target_rate << " outside the usual [0.15, 0.5]";
      log::warning(msg.str());
    }
    if (config_.initial_scale == 0.0) config_.initial_scale = 2.38 * 2.38 / static_cast<double>(n_);
    if (!(config_.initial_scale > 0.0)) throw ConfigError("AdaptiveMetropolis: scale must be positive");
    if (config_.initial_covariance.size() == 0) config_.initial_covariance = Matrix::Identity(n_, n_);
    if (config_.initial_covariance.rows() != n_ || config_.initial_covariance.cols() != n_)
      throw ConfigError("AdaptiveMetropolis: initial covariance has wrong shape");
    if (config_.learning_exponent <= 0.5 || config_.learning_exponent > 1.0)
      throw ConfigError("AdaptiveMetropolis: learning exponent must lie in (0.5, 1]");
  }

  const AdaptiveMetropolisConfig& config() const { return config_; }

  AdaptiveMetropolisState initial_state() const {
    AdaptiveMetropolisState s;
    s.running_mean = Vector::Zero(n_);
    s.scatter = Matrix::Zero(n_, n_);
    s.log_scale = std::log(config_.initial_scale);
    s.target_rate = config_.target_rate;
    return s;
  }

  /// s Sigma_k as it would be used for the next proposal.
  Matrix proposal_covariance(const AdaptiveMetropolisState& am) const {
    Matrix sigma = am.sample_count >= std::max<std::uint64_t>(config_.covariance_warmup, 2)
                       ? am.running_covariance()
                       : config_.initial_covariance;
    sigma = 0.5 * (sigma + sigma.transpose());
    sigma.diagonal().array() += config_.regularization * sigma.trace() / static_cast<double>(n_);
    return std::exp(am.log_scale) * sigma;
  }

  static const AdaptiveMetropolisState* adaptive_state(const ChainState& state) {
    return std::any_cast<AdaptiveMetropolisState>(&state.scratch);
  }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    if (state.position.size() != n_) throw ConfigError("AdaptiveMetropolis: dimension mismatch");
    auto* am = std::any_cast<AdaptiveMetropolisState>(&state.scratch);
    if (am == nullptr) {
      state.scratch = initial_state();
      am = std::any_cast<AdaptiveMetropolisState>(&state.scratch);
    }

    const Matrix lower = cholesky_spd(proposal_covariance(*am)).lower;
    const Vector v = lower.triangularView<Eigen::Lower>() * standard_normal(n_, rng);
    const Vector xi = state.position + v;
    const double lp = target(xi);
    const double u = rng.uniform();
    const double log_alpha = log_acceptance_probability(state.log_density, lp, 0.0);
    const bool accept = generalized_accept(state.log_density, lp, 0.0, u);
    if (accept) {
      state.position = xi;
      state.log_density = lp;
    }

    ++am->steps;
    const auto k = static_cast<double>(am->steps);
    am->mean_acceptance += ((accept ? 1.0 : 0.0) - am->mean_acceptance) / k;
    const bool adapting = config_.freeze_after == 0 || am->steps <= config_.freeze_after;
    if (adapting) {
      am->add_sample(state.position);
      am->log_scale += std::pow(k, -config_.learning_exponent) * (std::exp(log_alpha) - am->target_rate);
    }
    return {accept, 1, log_alpha};
  }

 private:
  Index n_;
  AdaptiveMetropolisConfig config_;
};

/// Metropolis on the expanded density pi(theta) N(V; 0, C) in which the
/// slice height is drawn first and V is refreshed uniformly from the
/// ellipsoid {V : pi(theta) q(V) >= h}. The auxiliary V persists between
/// iterations in ChainState::scratch.
class RefreshAuxiliaryMetropolis {
 public:
  explicit RefreshAuxiliaryMetropolis(const Matrix& proposal_covariance)
      : lower_(cholesky_spd(proposal_covariance).lower) {}

  struct Scratch {
    Vector aux;
  };

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const Index n = state.position.size();
    if (lower_.rows() != n) throw ConfigError("RefreshAuxiliaryMetropolis: dimension mismatch");
    auto* scratch = std::any_cast<Scratch>(&state.scratch);
    if (scratch == nullptr) {
      state.scratch = Scratch{lower_.triangularView<Eigen::Lower>() * standard_normal(n, rng)};
      scratch = std::any_cast<Scratch>(&state.scratch);
    }
    // log h - log pi(theta) + 1/2 log|2 pi C| = -1/2 Q(V) - E, with Q(V) = V^T C^{-1} V
    const double depth = rng.exponential();
    const double q_old = quadratic(scratch->aux);
    const Vector v = ellipsoid_uniform_covariance_form(lower_, q_old + 2.0 * depth, rng);
    const ExtendedPoint mapped = TranslationMap{}.apply({state.position, v});
    const double lp = target(mapped.theta);
    const double log_h = state.log_density - 0.5 * q_old - depth;
    const bool accept = lp != kNegInf && lp - 0.5 * quadratic(mapped.aux) >= log_h;
    const double log_alpha = log_acceptance_probability(state.log_density, lp, 0.0);
    if (accept) {
      state.position = mapped.theta;
      state.log_density = lp;
      scratch->aux = mapped.aux;
    } else {
      scratch->aux = v;
    }
    return {accept, 1, log_alpha};
  }

 private:
  double quadratic(const Vector& v) const { return lower_.triangularView<Eigen::Lower>().solve(v).squaredNorm(); }

  Matrix lower_;
};

}  // namespace gmh
