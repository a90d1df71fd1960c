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

#include "gmh/core.hpp"
#include "gmh/mappings.hpp"

namespace gmh {

/// Hamiltonian Monte Carlo with a leapfrog trajectory of L steps; L = 1 is
/// the Metropolis-adjusted Langevin algorithm. A trajectory that meets a
/// non-finite gradient is rejected.
///
/// With step_jitter = j > 0 each iteration uses eps (1 + j (2u - 1)) for a
/// fresh uniform u, which breaks the periodic trajectories a fixed eps L can
/// produce on near-Gaussian targets. The kernel stays reversible since u is
/// drawn independently of the state.
class Hmc {
 public:
  Hmc(double step_size, int n_steps, MassMatrix mass, double step_jitter = 0.0)
      : eps_(step_size), n_steps_(n_steps), mass_(std::move(mass)), jitter_(step_jitter) {
    if (!(eps_ > 0.0)) throw ConfigError("HMC: step size must be positive");
    if (n_steps_ < 1) throw ConfigError("HMC: need at least one leapfrog step");
    if (!(jitter_ >= 0.0 && jitter_ < 1.0)) throw ConfigError("HMC: step jitter must lie in [0, 1)");
  }

  double step_size() const { return eps_; }
  int n_steps() const { return n_steps_; }
  const MassMatrix& mass() const { return mass_; }

  double step_jitter() const { return jitter_; }

  Hmc with_step_size(double eps) const { return {eps, n_steps_, mass_, jitter_}; }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    if (mass_.dimension() != state.position.size()) throw ConfigError("HMC: mass matrix dimension mismatch");
    const double eps = jitter_ > 0.0 ? eps_ * (1.0 + jitter_ * (2.0 * rng.uniform() - 1.0)) : eps_;
    const Vector v = mass_.sample(rng);
    const auto mapped = leapfrog_trajectory(target, state.position, v, eps, n_steps_, mass_);
    double lp = kNegInf;
    double log_joint_proposed = kNegInf;
    if (mapped) {
      lp = target(mapped->theta);
      if (lp != kNegInf) log_joint_proposed = lp + mass_.log_density(mapped->aux);
    }
    const double log_joint_current = state.log_density + mass_.log_density(v);
    const double u = rng.uniform();
    const double log_alpha = log_acceptance_probability(log_joint_current, log_joint_proposed, 0.0);
    const bool accept = generalized_accept(log_joint_current, log_joint_proposed, 0.0, u);
    if (accept) {
      state.position = mapped->theta;
      state.log_density = lp;
    }
    return {accept, 1, log_alpha};
  }

 private:
  double eps_;
  int n_steps_;
  MassMatrix mass_;
  double jitter_ = 0.0;
};

inline Hmc mala(double step_size, MassMatrix mass) { return {step_size, 1, std::move(mass)}; }

struct StepSizeTuning {
  double step_size = 0.0;
  double mean_acceptance = 0.0;  // over the second half of the tuning run
  ChainState state;
};

/// Robbins-Monro search for the leapfrog step size: log eps moves by
/// k^-0.6 (alpha_k - target_rate). The returned step size is the geometric
/// mean over the second half of the run.
inline StepSizeTuning tune_hmc_step_size(const Hmc& kernel, const TargetDensity& target, ChainState state,
                                         int iterations, RngStream& rng, double target_rate = 0.65) {
  if (iterations < 2) throw ConfigError("HMC tuning: need at least two iterations");
  double log_eps = std::log(kernel.step_size());
  double log_eps_sum = 0.0, accept_sum = 0.0;
  int tail = 0;
  for (int k = 1; k <= iterations; ++k) {
    const KernelStep s = kernel.with_step_size(std::exp(log_eps)).step(state, target, rng);
    log_eps += std::pow(static_cast<double>(k), -0.6) * (std::exp(s.log_alpha) - target_rate);
    if (2 * k > iterations) {
      log_eps_sum += log_eps;
      accept_sum += s.accepted ? 1.0 : 0.0;
      ++tail;
    }
  }
  return {std::exp(log_eps_sum / tail), accept_sum / tail, std::move(state)};
}

}  // namespace gmh
