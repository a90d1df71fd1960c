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

#include <vector>

#include "gmh/samplers/gibbs.hpp"
#include "gmh/samplers/slice.hpp"
#include "gmh/targets.hpp"

// Ready-made samplers for the joint toy posterior over [u, x_1..x_T].
namespace gmh {

/// Gibbs sweep: u by univariate slice sampling on its conditional, then all
/// x_t jointly from their exact Gaussian conditionals.
inline GibbsSweep toy_gibbs_sweep(const ToyJointTarget& target, double u_width = 1.0) {
  const std::vector<double> y = target.data();
  std::vector<Index> states;
  for (std::size_t t = 0; t < y.size(); ++t) states.push_back(static_cast<Index>(t) + 1);
  ExactConditionalSampler draw_states = [y](const Vector& theta, RngStream& rng) {
    Vector x(static_cast<Index>(y.size()));
    for (std::size_t t = 0; t < y.size(); ++t)
      x[static_cast<Index>(t)] = ToyJointTarget::sample_state(theta[0], y[t], rng);
    return x;
  };
  return GibbsSweep({MhWithinGibbs({0}, AnyKernel(UnivariateSlice::coordinate(0, u_width))),
                     MhWithinGibbs(std::move(states), std::move(draw_states))});
}

/// Auxiliary-variable Gibbs with one slice height per factor l_0..l_T.
/// u is updated by stepping out against all T + 1 constraints; each x_t is
/// drawn uniformly from its exact slice interval.
inline AuxiliaryGibbs toy_auxiliary_gibbs(const ToyJointTarget& target, double u_width = 1.0) {
  const std::vector<double> y = target.data();
  std::vector<AuxiliaryFactor> factors;
  factors.push_back({[](const Vector& theta) { return ToyJointTarget::log_prior_factor(theta[0]); }, {0}});
  for (std::size_t t = 0; t < y.size(); ++t) {
    const auto i = static_cast<Index>(t) + 1;
    const double yt = y[t];
    factors.push_back({[i, yt](const Vector& theta) { return ToyJointTarget::log_factor(theta[0], theta[i], yt); },
                       {0, i}});
  }
  std::vector<CoordinateUpdate> updates;
  updates.push_back({0, {}, u_width});
  IntervalSolver solve = [y](const Vector& theta, Index coordinate, const std::vector<double>& log_h) {
    const auto t = static_cast<std::size_t>(coordinate - 1);
    return ToyJointTarget::conditional_interval(log_h[t + 1], theta[0], y[t]);
  };
  for (std::size_t t = 0; t < y.size(); ++t) updates.push_back({static_cast<Index>(t) + 1, solve, 1.0});
  return AuxiliaryGibbs(std::move(factors), std::move(updates));
}

/// Exact draw of the x block given u, used to start chains in stationarity
/// conditional on u.
inline Vector toy_joint_initial(const ToyJointTarget& target, double u, RngStream& rng) {
  Vector theta(target.dimension());
  theta[0] = u;
  for (std::size_t t = 0; t < target.horizon(); ++t)
    theta[static_cast<Index>(t) + 1] = ToyJointTarget::sample_state(u, target.data()[t], rng);
  return theta;
}

}  // namespace gmh
