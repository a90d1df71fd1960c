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
#include <utility>
#include <vector>

#include "gmh/error.hpp"
#include "gmh/linalg.hpp"
#include "gmh/rng.hpp"
#include "gmh/target.hpp"

namespace gmh {

namespace detail {

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// 1 / (1 + e^-x)
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Multivariate normal N(mean, cov) with exact sampler and gradient.
class GaussianTarget {
 public:
  GaussianTarget(Vector mean, Matrix cov) : params_(std::move(mean), std::move(cov)) {}

  Index dimension() const { return params_.dimension(); }
  const Vector& mean() const { return params_.mu(); }
  const Matrix& covariance() const { return params_.sigma(); }
  const EllipseParams& params() const { return params_; }

  double log_density(const Vector& x) const { return params_.log_density(x); }
  Vector gradient(const Vector& x) const { return -params_.sigma_solve(x - params_.mu()); }
  Vector sample(RngStream& rng) const { return params_.sample(rng); }

  TargetDensity target() const {
    const EllipseParams p = params_;
    return {p.dimension(), [p](const Vector& x) { return p.log_density(x); },
            [p](const Vector& x) -> Vector { return -p.sigma_solve(x - p.mu()); }};
  }

 private:
  EllipseParams params_;
};

/// Posterior of the log noise variance u given y_t ~ N(0, 1 + e^u) and a
/// standard normal prior on u:
///   log pi(u) = log N(u; 0, 1) - (T/2) log(1 + e^u) - sum y^2 / (2 (1 + e^u)).
class ToyScalarTarget {
 public:
  explicit ToyScalarTarget(std::vector<double> data) : data_(std::move(data)) {
    if (data_.empty()) throw ConfigError("toy target: empty data");
    for (double y : data_) sum_sq_ += y * y;
  }

  const std::vector<double>& data() const { return data_; }

  double log_density(double u) const {
    const double t = static_cast<double>(data_.size());
    const double log_var = detail::softplus(u);  // log(1 + e^u)
    return -0.5 * u * u - 0.5 * kLog2Pi - 0.5 * t * log_var - 0.5 * sum_sq_ * std::exp(-log_var);
  }

  double gradient(double u) const {
    const double t = static_cast<double>(data_.size());
    const double p = detail::logistic(u);  // e^u / (1 + e^u)
    const double inv_var = std::exp(-detail::softplus(u));
    return -u - 0.5 * t * p + 0.5 * sum_sq_ * p * inv_var;
  }

  /// Posterior mode by golden-section search on [lo, hi]; the density is
  /// unimodal in u.
  double mode(double lo = -10.0, double hi = 10.0, double tol = 1e-9) const {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = log_density(c), fd = log_density(d);
    while (hi - lo > tol) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - g * (hi - lo);
        fc = log_density(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + g * (hi - lo);
        fd = log_density(d);
      }
    }
    return 0.5 * (lo + hi);
  }

  TargetDensity target() const {
    auto self = *this;
    return {1, [self](const Vector& x) { return self.log_density(x[0]); },
            [self](const Vector& x) -> Vector { return Vector::Constant(1, self.gradient(x[0])); }};
  }

 private:
  std::vector<double> data_;
  double sum_sq_ = 0.0;
};

/// Joint posterior over theta = [u, x_1..x_T] for y_t = x_t + e_t with
/// x_t ~ N(0, 1), e_t ~ N(0, e^u), u ~ N(0, 1). The density factorizes as
/// l_0(u) prod_t l_t(u, x_t) with l_0 the prior and
///   l_t = exp(-x_t^2/2 - (y_t - x_t)^2 / (2 e^u)) / sqrt(e^u).
class ToyJointTarget {
 public:
  explicit ToyJointTarget(std::vector<double> data) : data_(std::move(data)) {
    if (data_.empty()) throw ConfigError("toy target: empty data");
  }

  const std::vector<double>& data() const { return data_; }
  Index dimension() const { return static_cast<Index>(data_.size()) + 1; }
  std::size_t horizon() const { return data_.size(); }

  static double log_prior_factor(double u) { return -0.5 * u * u - 0.5 * kLog2Pi; }

  /// log l_t at (u, x_t) for observation y_t.
  static double log_factor(double u, double x, double y) {
    const double d = y - x;
    return -0.5 * x * x - 0.5 * d * d * std::exp(-u) - 0.5 * u;
  }

  double log_density(const Vector& theta) const {
    const double u = theta[0];
    double total = log_prior_factor(u);
    const double inv = std::exp(-u);
    for (std::size_t t = 0; t < data_.size(); ++t) {
      const double x = theta[static_cast<Index>(t) + 1];
      const double d = data_[t] - x;
      total += -0.5 * x * x - 0.5 * d * d * inv;
    }
    return total - 0.5 * static_cast<double>(data_.size()) * u;
  }

  Vector gradient(const Vector& theta) const {
    const double u = theta[0];
    const double inv = std::exp(-u);
    Vector g(theta.size());
    double gu = -u - 0.5 * static_cast<double>(data_.size());
    for (std::size_t t = 0; t < data_.size(); ++t) {
      const auto i = static_cast<Index>(t) + 1;
      const double d = data_[t] - theta[i];
      gu += 0.5 * d * d * inv;
      g[i] = -theta[i] + d * inv;
    }
    g[0] = gu;
    return g;
  }

  TargetDensity target() const {
    auto self = *this;
    return {dimension(), [self](const Vector& x) { return self.log_density(x); },
            [self](const Vector& x) { return self.gradient(x); }};
  }

  /// Gaussian form l_t(x) = (s_t / sigma) exp(-(x - mu_t)^2 / (2 sigma^2)).
  struct FactorShape {
    double mu = 0.0;
    double sigma = 0.0;
    double log_s = 0.0;
  };

  /// Completing the square in x: sigma^2 = e^u / (e^u + 1),
  /// mu = y / (e^u + 1), s = exp(-y^2 / (2 (e^u + 1))) / sqrt(e^u + 1).
  static FactorShape factor_shape(double u, double y) {
    const double log_one_plus = detail::softplus(u);  // log(1 + e^u)
    FactorShape f;
    f.sigma = std::exp(0.5 * (u - log_one_plus));
    f.mu = y * std::exp(-log_one_plus);
    f.log_s = -0.5 * y * y * std::exp(-log_one_plus) - 0.5 * log_one_plus;
    return f;
  }

  /// Exact draw of x_t given u: N(mu_t, sigma^2).
  static double sample_state(double u, double y, RngStream& rng) {
    const FactorShape f = factor_shape(u, y);
    return f.mu + f.sigma * rng.normal();
  }

  /// {x : l_t(u, x) >= h} = mu_t +/- sigma sqrt(-2 log(sigma h / s_t)).
  static std::pair<double, double> conditional_interval(double log_h, double u, double y) {
    const FactorShape f = factor_shape(u, y);
    double arg = -2.0 * (std::log(f.sigma) + log_h - f.log_s);
    if (arg < -1e-12) throw ContractViolation("conditional interval: slice level above the factor maximum");
    arg = std::max(arg, 0.0);
    const double half = f.sigma * std::sqrt(arg);
    return {f.mu - half, f.mu + half};
  }

 private:
  std::vector<double> data_;
};

/// x_1 ~ N(0, p1), x_{t+1} = a x_t + N(0, q), y_t = x_t + N(0, r).
struct LinearGaussianSSM {
  double a = 0.0;
  double q = 1.0;
  double p1 = 1.0;
  double r = 1.0;

  using state_type = double;

  double sample_initial(RngStream& rng) const { return std::sqrt(p1) * rng.normal(); }
  double sample_transition(double x, RngStream& rng) const { return a * x + std::sqrt(q) * rng.normal(); }
  double sample_observation(double x, RngStream& rng) const { return x + std::sqrt(r) * rng.normal(); }
  double log_observation(double y, double x) const {
    const double d = y - x;
    return -0.5 * (kLog2Pi + std::log(r) + d * d / r);
  }
};

/// Exact log-likelihood by the Kalman filter (prediction-error decomposition).
inline double kalman_log_likelihood(const LinearGaussianSSM& model, const std::vector<double>& y) {
  if (!(model.q >= 0.0) || !(model.p1 >= 0.0) || !(model.r >= 0.0)) throw ConfigError("Kalman: negative variance");
  double mean = 0.0, var = model.p1, total = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t > 0) {
      mean = model.a * mean;
      var = model.a * model.a * var + model.q;
    }
    const double s = var + model.r;
    if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("Kalman: innovation variance not positive");
    const double e = y[t] - mean;
    total += -0.5 * (kLog2Pi + std::log(s) + e * e / s);
    const double gain = var / s;
    mean += gain * e;
    var *= (1.0 - gain);
  }
  return total;
}

/// Linear Gaussian model family indexed by the log observation variance:
/// theta = [log r]; a, q and p1 fixed.
struct LinearGaussianFamily {
  double a = 0.0;
  double q = 1.0;
  double p1 = 1.0;

  LinearGaussianSSM model(const Vector& theta) const {
    if (theta.size() != 1) throw ConfigError("linear Gaussian family: theta must be one-dimensional");
    return {a, q, p1, std::exp(theta[0])};
  }
  LinearGaussianSSM operator()(const Vector& theta) const { return model(theta); }
  double log_likelihood(const Vector& theta, const std::vector<double>& y) const {
    return kalman_log_likelihood(model(theta), y);
  }
};

/// y_t = x_t + e_t with x_t ~ N(0, 1) and e_t ~ N(0, e^u); x drawn before e.
inline std::vector<double> simulate_toy_data(std::size_t horizon, double true_u, RngStream& rng) {
  if (horizon < 1) throw ConfigError("simulate_toy_data: horizon must be positive");
  std::vector<double> y(horizon);
  const double sd = std::exp(0.5 * true_u);
  for (auto& v : y) {
    const double x = rng.normal();
    v = x + sd * rng.normal();
  }
  return y;
}

/// Observations from a linear Gaussian model.
inline std::vector<double> simulate_ssm(const LinearGaussianSSM& model, std::size_t horizon, RngStream& rng) {
  std::vector<double> y(horizon);
  double x = model.sample_initial(rng);
  for (std::size_t t = 0; t < horizon; ++t) {
    if (t > 0) x = model.sample_transition(x, rng);
    y[t] = model.sample_observation(x, rng);
  }
  return y;
}

/// Reference dataset parameters: seed 20170401, T = 100, true u = 0.
inline constexpr std::uint64_t kToyDatasetSeed = 20170401;
inline constexpr std::size_t kToyDatasetLength = 100;

inline std::vector<double> reference_toy_dataset() {
  RngStream rng(kToyDatasetSeed, 0);
  return simulate_toy_data(kToyDatasetLength, 0.0, rng);
}

/// Unnormalized Student-t with nu degrees of freedom in one dimension.
inline TargetDensity student_t_target(double nu, double location = 0.0, double scale = 1.0) {
  if (!(nu > 0.0) || !(scale > 0.0)) throw ConfigError("student t: nu and scale must be positive");
  return {1,
          [=](const Vector& x) {
            const double z = (x[0] - location) / scale;
            return -0.5 * (nu + 1.0) * std::log1p(z * z / nu);
          },
          [=](const Vector& x) -> Vector {
            const double z = (x[0] - location) / scale;
            return Vector::Constant(1, -(nu + 1.0) * z / (nu + z * z) / scale);
          }};
}

}  // namespace gmh
