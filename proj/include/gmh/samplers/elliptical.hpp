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
#include <numbers>
#include <optional>

#include "gmh/core.hpp"
#include "gmh/mappings.hpp"

namespace gmh {

struct EllipseSliceResult {
  Vector theta;
  Vector momentum;
  double log_density = kNegInf;
  std::int64_t evaluations = 0;
};

/// Angle bracket [u - 2 pi, u], u ~ U[0, 2 pi], shrunk towards r = 0 on each
/// rejection. `in_slice(theta, v)` returns the log density at the mapped
/// point or empty when outside the slice.
template <class InSlice>
EllipseSliceResult shrink_on_ellipse(const EllipticalMap& map, const Vector& theta, const Vector& v,
                                     const InSlice& in_slice, RngStream& rng, int max_shrinks = 1000) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double u = two_pi * rng.uniform();
  double a = u - two_pi, b = u;
  EllipseSliceResult out;
  for (int shrinks = 0;; ++shrinks) {
    if (shrinks > max_shrinks) throw ContractViolation("elliptical shrinkage exceeded the iteration cap");
    const double r = a + (b - a) * rng.uniform();
    auto [xi, w] = map.flow(theta, v, r);
    ++out.evaluations;
    if (const auto lp = in_slice(xi, w)) {
      out.theta = std::move(xi);
      out.momentum = std::move(w);
      out.log_density = *lp;
      return out;
    }
    if (r >= 0.0)
      b = r;
    else
      a = r;
  }
}

/// Elliptical slice sampling for pi(theta) = N(theta; mu, Sigma) L(theta).
/// The likelihood factor is taken as the target divided by the Gaussian
/// prior, so the target passed to step() must contain the prior.
class EllipticalSlice {
 public:
  explicit EllipticalSlice(EllipseParams prior) : map_(std::move(prior)) {}

  const EllipseParams& prior() const { return map_.params(); }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const EllipseParams& prior = map_.params();
    if (prior.dimension() != state.position.size()) throw ConfigError("elliptical slice: dimension mismatch");
    const Vector v = prior.sample_momentum(rng);
    const double log_h = state.log_density - prior.log_density(state.position) - rng.exponential();
    auto in_slice = [&](const Vector& xi, const Vector&) -> std::optional<double> {
      const double lp = target(xi);
      if (lp == kNegInf || lp - prior.log_density(xi) < log_h) return std::nullopt;
      return lp;
    };
    auto result = shrink_on_ellipse(map_, state.position, v, in_slice, rng);
    state.position = std::move(result.theta);
    state.log_density = result.log_density;
    return {true, result.evaluations, 0.0};
  }

 private:
  EllipticalMap map_;
};

/// Target built as Gaussian prior times a likelihood factor.
inline TargetDensity prior_times_likelihood(const EllipseParams& prior, LogDensityFn log_likelihood) {
  return {prior.dimension(), [prior, log_likelihood](const Vector& theta) {
            const double ll = log_likelihood(theta);
            return ll == kNegInf ? kNegInf : prior.log_density(theta) + ll;
          }};
}

/// Hamiltonian slice sampling on the joint pi(theta) N(v; 0, Sigma^{-1}):
/// a slice level under the joint, a uniform momentum refresh on the
/// ellipsoidal momentum slice, then shrinkage along the elliptical
/// trajectory of the Gaussian approximation. Momentum persists in scratch.
class HamiltonianSlice {
 public:
  explicit HamiltonianSlice(EllipseParams params) : map_(std::move(params)) {}

  struct Scratch {
    Vector momentum;
  };

  const EllipseParams& params() const { return map_.params(); }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const EllipseParams& p = map_.params();
    if (p.dimension() != state.position.size()) throw ConfigError("Hamiltonian slice: dimension mismatch");
    auto* scratch = std::any_cast<Scratch>(&state.scratch);
    if (scratch == nullptr) {
      state.scratch = Scratch{p.sample_momentum(rng)};
      scratch = std::any_cast<Scratch>(&state.scratch);
    }

    const double log_h = state.log_density + p.log_momentum_density(scratch->momentum) - rng.exponential();
    const double rho = p.momentum_slice_radius(log_h - state.log_density);
    if (!(rho > 0.0)) throw ContractViolation("Hamiltonian slice: momentum slice is empty");
    const Vector v = ellipsoid_uniform(p.lower(), rho, rng);

    auto in_slice = [&](const Vector& xi, const Vector& w) -> std::optional<double> {
      const double lp = target(xi);
      if (lp == kNegInf || lp + p.log_momentum_density(w) < log_h) return std::nullopt;
      return lp;
    };
    auto result = shrink_on_ellipse(map_, state.position, v, in_slice, rng);
    state.position = std::move(result.theta);
    state.log_density = result.log_density;
    scratch->momentum = std::move(result.momentum);
    return {true, result.evaluations, 0.0};
  }

 private:
  EllipticalMap map_;
};

}  // namespace gmh
