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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include "gmh/core.hpp"
#include "gmh/mappings.hpp"
#include "gmh/pseudo_marginal/particle_filter.hpp"

namespace gmh {

/// Parameter prior together with an unbiased likelihood estimator.
struct PseudoMarginalTarget {
  Index dimension = 1;
  LogDensityFn log_prior;
  LikelihoodEstimator estimator;
};

/// Chain state of a pseudo-marginal kernel. The cached estimate is the one
/// produced when the current position was accepted and is never refreshed.
struct PseudoMarginalState {
  Vector position;
  double log_prior = kNegInf;
  double log_estimate = kNegInf;
  std::uint64_t iteration = 0;
  std::optional<Vector> momentum;      // Hamiltonian variant only
  std::optional<double> reference_level;  // Hamiltonian variant only

  double log_target() const { return log_prior + log_estimate; }
};

inline PseudoMarginalState initial_pm_state(const PseudoMarginalTarget& target, const Vector& theta, RngStream& rng) {
  if (theta.size() != target.dimension) throw ConfigError("pseudo-marginal: initial point has wrong dimension");
  PseudoMarginalState s;
  s.position = theta;
  s.log_prior = target.log_prior(theta);
  if (s.log_prior == kNegInf) throw ContractViolation("pseudo-marginal: initial point outside prior support");
  s.log_estimate = target.estimator(theta, rng);
  if (s.log_estimate == kNegInf) throw ContractViolation("pseudo-marginal: initial likelihood estimate is zero");
  return s;
}

/// Pseudo-marginal Metropolis-Hastings with a Gaussian random-walk proposal.
class Pmmh {
 public:
  explicit Pmmh(const Matrix& proposal_covariance) : lower_(cholesky_spd(proposal_covariance).lower) {}

  KernelStep step(PseudoMarginalState& state, const PseudoMarginalTarget& target, RngStream& rng) const {
    if (!std::isfinite(state.log_estimate)) throw ContractViolation("PMMH: cached estimate is not finite");
    const Index n = state.position.size();
    if (lower_.rows() != n) throw ConfigError("PMMH: proposal dimension mismatch");
    const Vector xi = state.position + lower_.triangularView<Eigen::Lower>() * standard_normal(n, rng);
    const double log_prior = target.log_prior(xi);
    double log_estimate = kNegInf;
    if (log_prior != kNegInf) log_estimate = target.estimator(xi, rng);
    const double proposed = log_estimate == kNegInf ? kNegInf : log_prior + log_estimate;
    const double u = rng.uniform();
    const double log_alpha = log_acceptance_probability(state.log_target(), proposed, 0.0);
    const bool accept = generalized_accept(state.log_target(), proposed, 0.0, u);
    if (accept) {
      state.position = xi;
      state.log_prior = log_prior;
      state.log_estimate = log_estimate;
    }
    return {accept, 1, log_alpha};
  }

 private:
  Matrix lower_;
};

/// Symmetric integration-time proposal r ~ N(0, sigma^2 / h_rel^zeta), where
/// h_rel = h / h_ref is the slice level relative to a level fixed at the
/// start of the chain. The truncated variant restricts r to [-pi, pi].
struct IntegrationTimeProposal {
  enum class Kind { gaussian, truncated_gaussian };
  Kind kind = Kind::gaussian;
  double sigma = 1.0;
  double zeta = 1.0;

  double log_variance(double log_h_rel) const {
    // clamped so that extreme levels cannot produce overflow or a stuck sampler
    return std::clamp(2.0 * std::log(sigma) - zeta * log_h_rel, -20.0, 8.0);
  }

  double sample(double log_h_rel, RngStream& rng) const {
    const double sd = std::exp(0.5 * log_variance(log_h_rel));
    if (kind == Kind::gaussian) return sd * rng.normal();
    for (int i = 0; i < 100000; ++i) {
      const double r = sd * rng.normal();
      if (std::abs(r) <= std::numbers::pi) return r;
    }
    return std::numbers::pi * (2.0 * rng.uniform() - 1.0);
  }
};

/// Pseudo-marginal Hamiltonian slice sampling: slice level under
/// q_v(v) pi^(theta, u), uniform momentum refresh on the slice ellipsoid,
/// one elliptical move with a fresh estimate, accepted iff it stays in the
/// slice. No shrinkage: a rejected estimate cannot be reused.
class PmHamiltonianSlice {
 public:
  PmHamiltonianSlice(EllipseParams params, IntegrationTimeProposal r_proposal = {})
      : map_(std::move(params)), r_proposal_(r_proposal) {
    if (!(r_proposal_.sigma > 0.0) || !(r_proposal_.zeta >= 0.0))
      throw ConfigError("PM Hamiltonian slice: sigma must be positive and zeta nonnegative");
  }

  const EllipseParams& params() const { return map_.params(); }

  /// Draws momentum and the reference level if the state has none yet.
  void prepare(PseudoMarginalState& state, RngStream& rng) const {
    if (!state.momentum) state.momentum = map_.params().sample_momentum(rng);
    if (!state.reference_level)
      state.reference_level = map_.params().log_momentum_density(Vector::Zero(state.position.size())) + state.log_target();
  }

  /// One move at integration time r and slice level log_h, after the
  /// momentum refresh.
  KernelStep move(PseudoMarginalState& state, const PseudoMarginalTarget& target, double r, double log_h,
                  RngStream& rng) const {
    const EllipseParams& p = map_.params();
    auto [xi, w] = map_.flow(state.position, *state.momentum, r);
    double log_prior = state.log_prior, log_estimate = state.log_estimate;
    if (r != 0.0) {
      log_prior = target.log_prior(xi);
      log_estimate = log_prior == kNegInf ? kNegInf : target.estimator(xi, rng);
    }
    const double proposed = log_estimate == kNegInf ? kNegInf : log_prior + log_estimate + p.log_momentum_density(w);
    const bool accept = proposed != kNegInf && proposed >= log_h;
    if (accept) {
      state.position = std::move(xi);
      state.momentum = std::move(w);
      state.log_prior = log_prior;
      state.log_estimate = log_estimate;
    }
    const double current = state.log_target() + p.log_momentum_density(*state.momentum);
    return {accept, 1, accept ? 0.0 : log_acceptance_probability(current, proposed, 0.0)};
  }

  KernelStep step(PseudoMarginalState& state, const PseudoMarginalTarget& target, RngStream& rng) const {
    if (!std::isfinite(state.log_estimate)) throw ContractViolation("PM Hamiltonian slice: cached estimate is not finite");
    const EllipseParams& p = map_.params();
    if (p.dimension() != state.position.size()) throw ConfigError("PM Hamiltonian slice: dimension mismatch");
    prepare(state, rng);
    const double log_h = state.log_target() + p.log_momentum_density(*state.momentum) - rng.exponential();
    const double rho = p.momentum_slice_radius(log_h - state.log_target());
    if (!(rho > 0.0)) throw ContractViolation("PM Hamiltonian slice: momentum slice is empty");
    state.momentum = ellipsoid_uniform(p.lower(), rho, rng);
    const double r = r_proposal_.sample(log_h - *state.reference_level, rng);
    return move(state, target, r, log_h, rng);
  }

 private:
  EllipticalMap map_;
  IntegrationTimeProposal r_proposal_;
};

template <class K>
concept PseudoMarginalKernel = requires(const K& k, PseudoMarginalState& s, const PseudoMarginalTarget& t, RngStream& r) {
  { k.step(s, t, r) } -> std::same_as<KernelStep>;
};

/// Runs a pseudo-marginal kernel; the trace's log-density column holds the
/// cached log prior + log estimate.
template <PseudoMarginalKernel K>
ChainTrace run_pm_chain(const K& kernel, const PseudoMarginalTarget& target, PseudoMarginalState& state,
                        Index iterations, RngStream& rng) {
  if (iterations < 1) throw ConfigError("run_pm_chain: iterations must be >= 1");
  ChainTrace trace(iterations, state.position.size());
  for (Index k = 0; k < iterations; ++k) {
    const KernelStep s = kernel.step(state, target, rng);
    ++state.iteration;
    trace.samples.row(k) = state.position.transpose();
    const auto i = static_cast<std::size_t>(k);
    trace.accepted[i] = s.accepted ? 1 : 0;
    trace.log_density[i] = state.log_target();
    trace.proposals_evaluated[i] = s.proposals_evaluated;
  }
  return trace;
}

template <PseudoMarginalKernel K>
ChainTrace run_pm_chain(const K& kernel, const PseudoMarginalTarget& target, const Vector& initial,
                        Index iterations, RngStream& rng) {
  PseudoMarginalState state = initial_pm_state(target, initial, rng);
  return run_pm_chain(kernel, target, state, iterations, rng);
}

struct ParticleTuningResult {
  std::size_t n_particles = 0;
  double log_estimate_variance = 0.0;
  std::vector<std::pair<std::size_t, double>> history;  // (N, variance) per tried N
};

/// Doubling search for the smallest particle count N >= n_min whose sample
/// variance of log estimates at theta_ref over R replicates is at most the
/// upper end of the band (default [0.25, 2.25]).
inline ParticleTuningResult tune_particle_count(const std::function<LikelihoodEstimator(std::size_t)>& factory,
                                                const Vector& theta_ref, std::size_t replicates, RngStream& rng,
                                                std::pair<double, double> band = {0.25, 2.25},
                                                std::size_t n_min = 8, std::size_t n_max = 1000000) {
  if (replicates < 20) throw ConfigError("particle tuning: need at least 20 replicates");
  if (!(band.first >= 0.0 && band.first < band.second)) throw ConfigError("particle tuning: invalid band");
  if (n_min < 2) throw ConfigError("particle tuning: minimum particle count must be >= 2");
  ParticleTuningResult result;
  for (std::size_t n = n_min; n <= n_max; n *= 2) {
    const LikelihoodEstimator est = factory(n);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      const double v = est(theta_ref, rng);
      if (!std::isfinite(v)) {
        m2 = std::numeric_limits<double>::infinity();
        break;
      }
      const double d = v - mean;
      mean += d / static_cast<double>(r + 1);
      m2 += d * (v - mean);
    }
    const double var = m2 / static_cast<double>(replicates - 1);
    result.history.emplace_back(n, var);
    if (var <= band.second) {
      result.n_particles = n;
      result.log_estimate_variance = var;
      return result;
    }
  }
  std::ostringstream msg;
  msg << "particle tuning: variance still above " << band.second << " at the cap of " << n_max << " particles;";
  for (const auto& [n, v] : result.history) msg << " N=" << n << ":" << v;
  throw NumericalError(msg.str());
}

}  // namespace gmh
