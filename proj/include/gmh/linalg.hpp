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
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "gmh/error.hpp"
#include "gmh/log.hpp"
#include "gmh/rng.hpp"

namespace gmh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct CholeskyResult {
  Matrix lower;         // L with L L^T = A + jitter * I
  double jitter = 0.0;  // absolute amount added to the diagonal
};

/// Cholesky factor of a symmetric positive (semi)definite matrix.
///
/// On failure the diagonal is loaded with 1e-10 * mean(diag), escalating by
/// 10x up to 1e-6 * mean(diag); beyond that NumericalError is thrown.
inline CholeskyResult cholesky_spd(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw ConfigError("cholesky_spd: matrix must be square and non-empty");
  if (!a.allFinite()) throw ContractViolation("cholesky_spd: non-finite entry");
  const double scale = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0))
    throw ConfigError("cholesky_spd: matrix is not symmetric");

  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

  const double mean_diag = std::abs(sym.diagonal().mean());
  const double base = mean_diag > 0.0 ? mean_diag : 1.0;
  for (double factor = 1e-10; factor <= 1e-6 * (1.0 + 1e-9); factor *= 10.0) {
    const double jitter = factor * base;
    Matrix loaded = sym;
    loaded.diagonal().array() += jitter;
    llt.compute(loaded);
    if (llt.info() == Eigen::Success) {
      std::ostringstream msg;
      msg << "cholesky_spd: factorization needed jitter " << jitter;
      log::info(msg.str());
      return {llt.matrixL(), jitter};
    }
  }
  throw NumericalError("cholesky_spd: matrix not positive definite even with 1e-6 relative jitter");
}

inline Vector standard_normal(Index n, RngStream& rng) {
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

/// mean + L z with z iid standard normal.
inline Vector mvn_sample(const Vector& mean, const Matrix& lower, RngStream& rng) {
  if (lower.rows() != mean.size() || lower.cols() != mean.size())
    throw ConfigError("mvn_sample: dimension mismatch between mean and factor");
  return mean + lower.triangularView<Eigen::Lower>() * standard_normal(mean.size(), rng);
}

/// log |A| from the lower Cholesky factor of A.
inline double log_det_from_lower(const Matrix& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

/// Uniform draw from the unit ball in R^n: direction z/|z|, radius u^(1/n).
inline Vector unit_ball_uniform(Index n, RngStream& rng) {
  Vector z = standard_normal(n, rng);
  double norm = z.norm();
  while (norm == 0.0) {
    z = standard_normal(n, rng);
    norm = z.norm();
  }
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return z * (radius / norm);
}

/// Uniform draw from the ellipsoid {v : v^T A v <= rho}, given A = L L^T.
///
/// With y uniform in the unit ball, v = sqrt(rho) L^{-T} y gives
/// L^T v = sqrt(rho) y, hence v^T A v = rho |y|^2 <= rho.
inline Vector ellipsoid_uniform(const Matrix& lower_of_metric, double rho, RngStream& rng) {
  if (!(rho > 0.0)) throw ContractViolation("ellipsoid_uniform: radius must be positive");
  const Vector y = unit_ball_uniform(lower_of_metric.rows(), rng);
  return std::sqrt(rho) * lower_of_metric.transpose().triangularView<Eigen::Upper>().solve(y);
}

/// Same ellipsoid, but parameterized by the factor of C = A^{-1} = L L^T:
/// v = sqrt(rho) L y, so v^T C^{-1} v = rho |y|^2.
inline Vector ellipsoid_uniform_covariance_form(const Matrix& lower_of_covariance, double rho,
                                                RngStream& rng) {
  if (!(rho > 0.0)) throw ContractViolation("ellipsoid_uniform: radius must be positive");
  const Vector y = unit_ball_uniform(lower_of_covariance.rows(), rng);
  const Vector v = lower_of_covariance.triangularView<Eigen::Lower>() * y;
  return std::sqrt(rho) * v;
}

/// Gaussian approximation N(mu, Sigma) driving the elliptical trajectories.
/// The momentum v is distributed N(0, Sigma^{-1}).
class EllipseParams {
 public:
  EllipseParams() = default;

  EllipseParams(Vector mu, Matrix sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    if (sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size())
      throw ConfigError("EllipseParams: covariance and mean dimensions differ");
    const auto chol = cholesky_spd(sigma_);
    lower_ = chol.lower;
    sigma_.diagonal().array() += chol.jitter;
    log_det_ = log_det_from_lower(lower_);
  }

  static EllipseParams standard(Index n) { return {Vector::Zero(n), Matrix::Identity(n, n)}; }

  Index dimension() const { return mu_.size(); }
  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  const Matrix& lower() const { return lower_; }
  double log_det_sigma() const { return log_det_; }

  Vector sigma_times(const Vector& v) const { return sigma_ * v; }

  /// Sigma^{-1} x through two triangular solves.
  Vector sigma_solve(const Vector& x) const {
    const Vector y = lower_.triangularView<Eigen::Lower>().solve(x);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
  }

  /// (theta - mu)^T Sigma^{-1} (theta - mu)
  double mahalanobis(const Vector& theta) const {
    return lower_.triangularView<Eigen::Lower>().solve(theta - mu_).squaredNorm();
  }

  double momentum_quadratic(const Vector& v) const {
    return (lower_.transpose() * v).squaredNorm();
  }

  /// 1/2 [(theta-mu)^T Sigma^{-1} (theta-mu) + v^T Sigma v]
  double approx_hamiltonian(const Vector& theta, const Vector& v) const {
    return 0.5 * (mahalanobis(theta) + momentum_quadratic(v));
  }

  /// v ~ N(0, Sigma^{-1}) as L^{-T} z.
  Vector sample_momentum(RngStream& rng) const {
    const Vector z = standard_normal(dimension(), rng);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(z);
  }

  double log_momentum_density(const Vector& v) const {
    const double n = static_cast<double>(dimension());
    return -0.5 * momentum_quadratic(v) - 0.5 * n * kLog2Pi + 0.5 * log_det_;
  }

  /// Normalized log N(theta; mu, Sigma).
  double log_density(const Vector& theta) const {
    const double n = static_cast<double>(dimension());
    return -0.5 * mahalanobis(theta) - 0.5 * n * kLog2Pi - 0.5 * log_det_;
  }

  Vector sample(RngStream& rng) const { return mvn_sample(mu_, lower_, rng); }

  /// Squared radius of the momentum slice {v : log q_v(v) >= log_level}.
  double momentum_slice_radius(double log_level) const {
    const double n = static_cast<double>(dimension());
    return 2.0 * (-log_level - 0.5 * n * kLog2Pi + 0.5 * log_det_);
  }

 private:
  Vector mu_;
  Matrix sigma_;
  Matrix lower_;
  double log_det_ = 0.0;
};

/// Sample mean and covariance (divisor M) of the rows of a matrix.
inline std::pair<Vector, Matrix> sample_moments(const Matrix& rows) {
  const Vector mean = rows.colwise().mean().transpose();
  const Matrix centered = rows.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(rows.rows());
  return {mean, cov};
}

}  // namespace gmh
