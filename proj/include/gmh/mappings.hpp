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

// Self-inverse maps T(theta, V) = (xi, W) with T(T(x)) = x.
//
// Every map exposes apply() and log_abs_jacobian() on an ExtendedPoint; the
// auxiliary layout of each map is documented on the class.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <vector>

#include "gmh/error.hpp"
#include "gmh/linalg.hpp"
#include "gmh/target.hpp"

namespace gmh {

struct ExtendedPoint {
  Vector theta;
  Vector aux;
};

template <class T>
concept SelfInverseMap = requires(const T& map, const ExtendedPoint& x) {
  { map.apply(x) } -> std::same_as<ExtendedPoint>;
  { map.log_abs_jacobian(x) } -> std::convertible_to<double>;
};

/// xi = theta + V, W = -V. Aux: V (same dimension as theta).
struct TranslationMap {
  ExtendedPoint apply(const ExtendedPoint& x) const {
    if (x.aux.size() != x.theta.size()) throw ConfigError("translation map: dimension mismatch");
    return {x.theta + x.aux, -x.aux};
  }
  double log_abs_jacobian(const ExtendedPoint&) const { return 0.0; }
};

/// Replace the coordinates in `block` by V and hand the old values back as W.
/// Aux: V with one entry per block coordinate.
class GibbsSwapMap {
 public:
  explicit GibbsSwapMap(std::vector<Index> block, Index dimension) : block_(std::move(block)) {
    if (block_.empty()) throw ConfigError("gibbs swap: empty block");
    std::vector<Index> sorted = block_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("gibbs swap: repeated index in block");
    for (Index i : block_)
      if (i < 0 || i >= dimension) throw ConfigError("gibbs swap: block index out of range");
  }

  const std::vector<Index>& block() const { return block_; }

  ExtendedPoint apply(const ExtendedPoint& x) const {
    if (x.aux.size() != static_cast<Index>(block_.size())) throw ConfigError("gibbs swap: aux size mismatch");
    ExtendedPoint out{x.theta, Vector(x.aux.size())};
    for (std::size_t i = 0; i < block_.size(); ++i) {
      const auto j = static_cast<Index>(i);
      out.aux[j] = x.theta[block_[i]];
      out.theta[block_[i]] = x.aux[j];
    }
    return out;
  }
  double log_abs_jacobian(const ExtendedPoint&) const { return 0.0; }

 private:
  std::vector<Index> block_;
};

/// Line move xi = theta + r (v + rho theta), s = -r / (1 + r rho), w = v.
/// Aux layout: [r, v_1..v_n]. rho is restricted to 0 or -1.
class DirectionalMap {
 public:
  explicit DirectionalMap(double rho = 0.0) : rho_(rho) {
    if (rho != 0.0 && rho != -1.0) throw ConfigError("directional map: rho must be 0 or -1");
  }

  double rho() const { return rho_; }

  ExtendedPoint apply(const ExtendedPoint& x) const {
    const Index n = x.theta.size();
    check(x);
    const double r = x.aux[0];
    const double scale = 1.0 + r * rho_;
    const Vector v = x.aux.tail(n);
    ExtendedPoint out{scale * x.theta + r * v, Vector(n + 1)};
    out.aux[0] = -r / scale;
    out.aux.tail(n) = v;
    return out;
  }

  double log_abs_jacobian(const ExtendedPoint& x) const {
    check(x);
    const double n = static_cast<double>(x.theta.size());
    return (n - 2.0) * std::log(std::abs(1.0 + x.aux[0] * rho_));
  }

 private:
  void check(const ExtendedPoint& x) const {
    if (x.aux.size() != x.theta.size() + 1) throw ConfigError("directional map: aux must be [r, v]");
    if (x.theta.size() == 1 && rho_ != 0.0) throw ConfigError("directional map: one dimension requires rho = 0");
    if (std::abs(1.0 + x.aux[0] * rho_) < 1e-12) throw ContractViolation("directional map: singular time 1 + r rho = 0");
  }

  double rho_;
};

/// Closed-form flow of the Gaussian Hamiltonian
///   xi = (theta - mu) cos r + Sigma v sin r + mu
///   w  = v cos r - Sigma^{-1} (theta - mu) sin r
/// followed by r -> -r. Aux layout: [v_1..v_n, r].
class EllipticalMap {
 public:
  explicit EllipticalMap(EllipseParams params) : params_(std::move(params)) {}

  const EllipseParams& params() const { return params_; }

  /// (xi, w) for a given integration time; the building block of apply().
  std::pair<Vector, Vector> flow(const Vector& theta, const Vector& v, double r) const {
    const double c = std::cos(r), s = std::sin(r);
    const Vector centered = theta - params_.mu();
    Vector xi = centered * c + params_.sigma_times(v) * s + params_.mu();
    Vector w = v * c - params_.sigma_solve(centered) * s;
    return {std::move(xi), std::move(w)};
  }

  ExtendedPoint apply(const ExtendedPoint& x) const {
    const Index n = x.theta.size();
    if (n != params_.dimension() || x.aux.size() != n + 1) throw ConfigError("elliptical map: aux must be [v, r]");
    auto [xi, w] = flow(x.theta, x.aux.head(n), x.aux[n]);
    ExtendedPoint out{std::move(xi), Vector(n + 1)};
    out.aux.head(n) = w;
    out.aux[n] = -x.aux[n];
    return out;
  }
  double log_abs_jacobian(const ExtendedPoint&) const { return 0.0; }

 private:
  EllipseParams params_;
};

/// Gaussian momentum distribution N(0, M) for leapfrog dynamics, with kinetic
/// energy 1/2 v^T M^{-1} v. Defaults to the identity.
class MassMatrix {
 public:
  MassMatrix() = default;
  explicit MassMatrix(Index n) : MassMatrix(Matrix::Identity(n, n)) {}
  explicit MassMatrix(Matrix covariance) : cov_(std::move(covariance)) {
    const auto chol = cholesky_spd(cov_);
    lower_ = chol.lower;
    cov_.diagonal().array() += chol.jitter;
    log_det_ = log_det_from_lower(lower_);
  }

  /// Momentum distributed N(0, Sigma^{-1}), matching Sigma-preconditioned Langevin moves.
  static MassMatrix inverse_of(const Matrix& sigma) {
    return MassMatrix(Matrix(sigma.llt().solve(Matrix::Identity(sigma.rows(), sigma.cols()))));
  }

  Index dimension() const { return cov_.rows(); }
  const Matrix& covariance() const { return cov_; }

  Vector inverse_times(const Vector& v) const {
    const Vector y = lower_.triangularView<Eigen::Lower>().solve(v);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
  }
  double kinetic(const Vector& v) const {
    return 0.5 * lower_.triangularView<Eigen::Lower>().solve(v).squaredNorm();
  }
  Vector sample(RngStream& rng) const {
    return lower_.triangularView<Eigen::Lower>() * standard_normal(dimension(), rng);
  }
  double log_density(const Vector& v) const {
    return -kinetic(v) - 0.5 * static_cast<double>(dimension()) * kLog2Pi - 0.5 * log_det_;
  }

 private:
  Matrix cov_;
  Matrix lower_;
  double log_det_ = 0.0;
};

/// L leapfrog steps of size eps for H = -log pi(theta) + 1/2 v^T M^{-1} v,
/// followed by momentum negation. Empty when a gradient along the
/// trajectory is not finite.
inline std::optional<ExtendedPoint> leapfrog_trajectory(const TargetDensity& target, const Vector& theta0,
                                                       const Vector& v0, double eps, int n_steps,
                                                       const MassMatrix& mass) {
  Vector theta = theta0;
  Vector v = v0;
  Vector grad = target.gradient(theta);
  if (!grad.allFinite()) return std::nullopt;
  v += 0.5 * eps * grad;
  for (int l = 0; l < n_steps; ++l) {
    theta += eps * mass.inverse_times(v);
    grad = target.gradient(theta);
    if (!grad.allFinite() || !theta.allFinite()) return std::nullopt;
    v += (l + 1 == n_steps ? 0.5 : 1.0) * eps * grad;
  }
  return ExtendedPoint{std::move(theta), -v};
}

/// Leapfrog integration plus momentum negation as a self-inverse map with
/// unit Jacobian. Aux: v.
class LeapfrogMap {
 public:
  LeapfrogMap(TargetDensity target, double step_size, int n_steps, MassMatrix mass)
      : target_(std::move(target)), eps_(step_size), n_steps_(n_steps), mass_(std::move(mass)) {
    if (!target_.has_gradient()) throw ConfigError("leapfrog: target has no gradient");
    if (!(eps_ > 0.0)) throw ConfigError("leapfrog: step size must be positive");
    if (n_steps_ < 1) throw ConfigError("leapfrog: need at least one step");
    if (mass_.dimension() != target_.dimension()) throw ConfigError("leapfrog: mass matrix dimension mismatch");
  }

  double step_size() const { return eps_; }
  int n_steps() const { return n_steps_; }
  const MassMatrix& mass() const { return mass_; }

  std::optional<ExtendedPoint> try_apply(const ExtendedPoint& x) const {
    return leapfrog_trajectory(target_, x.theta, x.aux, eps_, n_steps_, mass_);
  }

  ExtendedPoint apply(const ExtendedPoint& x) const {
    auto out = try_apply(x);
    if (!out) throw NumericalError("leapfrog: non-finite gradient along trajectory");
    return *out;
  }
  double log_abs_jacobian(const ExtendedPoint&) const { return 0.0; }

 private:
  TargetDensity target_;
  double eps_;
  int n_steps_;
  MassMatrix mass_;
};

/// Determinant of the Jacobian of a map on the flattened (theta, aux) vector
/// by central differences. Test oracle for the analytic log-Jacobians.
template <SelfInverseMap Map>
double finite_difference_jacobian_determinant(const Map& map, const ExtendedPoint& x, double h = 1e-6) {
  const Index n = x.theta.size(), m = x.aux.size();
  auto flatten = [n, m](const ExtendedPoint& p) {
    Vector f(n + m);
    f << p.theta, p.aux;
    return f;
  };
  auto unflatten = [n, m](const Vector& f) { return ExtendedPoint{f.head(n), f.tail(m)}; };
  const Vector base = flatten(x);
  Matrix jac(n + m, n + m);
  for (Index j = 0; j < n + m; ++j) {
    Vector hi = base, lo = base;
    hi[j] += h;
    lo[j] -= h;
    jac.col(j) = (flatten(map.apply(unflatten(hi))) - flatten(map.apply(unflatten(lo)))) / (2.0 * h);
  }
  return jac.determinant();
}

}  // namespace gmh
