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


#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "gmh/target.hpp"
#include "gmh/targets.hpp"
#include "test_support.hpp"

namespace gmh {
namespace {

const std::vector<double>& dataset() {
  static const std::vector<double> y = reference_toy_dataset();
  return y;
}

// Trapezoid integral of exp(f) over [lo, hi], returned on the log scale.
template <class F>
double log_integral(const F& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) peak = std::max(peak, f(lo + i * h));
  double s = 0.0;
  for (int i = 0; i <= n; ++i) s += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(f(lo + i * h) - peak);
  return peak + std::log(s * h);
}

TEST(GaussianTarget, LogDensityMatchesClosedForm) {
  const Matrix c = testing::correlated_covariance();
  const Vector mu{{1.0, -2.0}};
  const GaussianTarget g(mu, c);
  RngStream rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vector x = g.sample(rng);
    const Vector d = x - mu;
    const double expected = -kLog2Pi - 0.5 * std::log(c.determinant()) - 0.5 * d.dot(c.inverse() * d);
    EXPECT_NEAR(g.log_density(x), expected, 1e-12);
  }
}

TEST(ToyScalarTarget, DensityFormula) {
  const ToyScalarTarget t(dataset());
  double sum_sq = 0.0;
  for (double y : dataset()) sum_sq += y * y;
  const double tt = static_cast<double>(dataset().size());
  for (double u : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const double expected =
        -0.5 * u * u - 0.5 * kLog2Pi - 0.5 * tt * std::log(1 + std::exp(u)) - sum_sq / (2 * (1 + std::exp(u)));
    EXPECT_NEAR(t.log_density(u), expected, 1e-10 * std::abs(expected));
  }
  // stays finite far in the tails
  EXPECT_TRUE(std::isfinite(t.log_density(-700.0)));
  EXPECT_TRUE(std::isfinite(t.log_density(700.0)));
}

TEST(ToyScalarTarget, GradientMatchesFiniteDifferences) {
  const TargetDensity t = ToyScalarTarget(dataset()).target();
  for (double u : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
    const Vector x = Vector::Constant(1, u);
    const double fd = finite_difference_gradient(t, x)[0];
    EXPECT_LE(std::abs(t.gradient(x)[0] - fd), 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(ToyScalarTarget, GoldenSectionModeMatchesGrid) {
  const ToyScalarTarget t(dataset());
  double best = -10.0, best_lp = t.log_density(best);
  for (double u = -10.0; u <= 10.0; u += 1e-5) {
    const double lp = t.log_density(u);
    if (lp > best_lp) {
      best_lp = lp;
      best = u;
    }
  }
  EXPECT_NEAR(t.mode(), best, 1e-4);
  EXPECT_NEAR(t.gradient(t.mode()), 0.0, 1e-6);
}

TEST(ToyJointTarget, DensityIsSumOfFactors) {
  const ToyJointTarget joint(dataset());
  RngStream rng(2);
  for (int i = 0; i < 10; ++i) {
    Vector theta(joint.dimension());
    for (Index k = 0; k < theta.size(); ++k) theta[k] = rng.normal();
    double expected = ToyJointTarget::log_prior_factor(theta[0]);
    for (std::size_t t = 0; t < joint.horizon(); ++t)
      expected += ToyJointTarget::log_factor(theta[0], theta[static_cast<Index>(t) + 1], dataset()[t]);
    EXPECT_NEAR(joint.log_density(theta), expected, 1e-9 * std::abs(expected));
  }
}

TEST(ToyJointTarget, GradientMatchesFiniteDifferences) {
  const ToyJointTarget joint(std::vector<double>(dataset().begin(), dataset().begin() + 5));
  const TargetDensity t = joint.target();
  RngStream rng(3);
  for (int i = 0; i < 10; ++i) {
    Vector theta(joint.dimension());
    for (Index k = 0; k < theta.size(); ++k) theta[k] = rng.normal();
    const Vector fd = finite_difference_gradient(t, theta);
    EXPECT_LE((t.gradient(theta) - fd).norm(), 1e-4 * std::max(1.0, fd.norm()));
  }
}

TEST(ToyJointTarget, ConditionalMomentsMatchNumericalIntegration) {
  for (double u : {-2.0, -0.5, 0.0, 0.8, 2.0}) {
    for (double y : {-2.3, 0.0, 0.4, 3.1}) {
      const auto f = ToyJointTarget::factor_shape(u, y);
      const double lo = -15.0, hi = 15.0;
      const int n = 60000;
      const double h = (hi - lo) / n;
      double z = 0.0, m1 = 0.0, m2 = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double x = lo + i * h;
        const double w = std::exp(ToyJointTarget::log_factor(u, x, y));
        z += w;
        m1 += w * x;
        m2 += w * x * x;
      }
      const double mean = m1 / z, var = m2 / z - mean * mean;
      EXPECT_NEAR(f.mu, mean, 1e-8) << "u=" << u << " y=" << y;
      EXPECT_NEAR(f.sigma * f.sigma, var, 1e-8) << "u=" << u << " y=" << y;
      EXPECT_NEAR(f.mu, y / (1 + std::exp(u)), 1e-12);
      // the factor integrates to s sqrt(2 pi)
      EXPECT_NEAR(std::log(z * h), f.log_s + 0.5 * kLog2Pi, 1e-8);
    }
  }
}

TEST(ToyJointTarget, ExactStateDrawsHaveConditionalMoments) {
  RngStream rng(4);
  const double u = 0.6, y = 1.7;
  const auto f = ToyJointTarget::factor_shape(u, y);
  std::vector<double> z;
  for (int i = 0; i < 20000; ++i) z.push_back((ToyJointTarget::sample_state(u, y, rng) - f.mu) / f.sigma);
  EXPECT_LT(testing::ks_statistic(z, testing::normal_cdf), 0.015);
}

TEST(ToyJointTarget, ConditionalIntervalEndpointsLieOnTheSlice) {
  RngStream rng(5);
  for (int i = 0; i < 200; ++i) {
    const double u = 2 * rng.normal(), y = 2 * rng.normal(), x = y / 2 + rng.normal();
    const double log_h = ToyJointTarget::log_factor(u, x, y) - rng.exponential();
    const auto [lo, hi] = ToyJointTarget::conditional_interval(log_h, u, y);
    EXPECT_NEAR(ToyJointTarget::log_factor(u, lo, y), log_h, 1e-9 * std::max(1.0, std::abs(log_h)));
    EXPECT_NEAR(ToyJointTarget::log_factor(u, hi, y), log_h, 1e-9 * std::max(1.0, std::abs(log_h)));
    EXPECT_LE(lo, x);
    EXPECT_GE(hi, x);
    const double mid = lo + (hi - lo) * rng.uniform();
    EXPECT_GE(ToyJointTarget::log_factor(u, mid, y), log_h - 1e-12);
  }
}

TEST(ToyJointTarget, IntervalAtTheModeIsDegenerate) {
  const double u = 0.3, y = -1.2;
  const auto f = ToyJointTarget::factor_shape(u, y);
  const auto [lo, hi] = ToyJointTarget::conditional_interval(ToyJointTarget::log_factor(u, f.mu, y), u, y);
  EXPECT_NEAR(lo, f.mu, 1e-6);
  EXPECT_NEAR(hi, f.mu, 1e-6);
  EXPECT_THROW(ToyJointTarget::conditional_interval(ToyJointTarget::log_factor(u, f.mu, y) + 1e-3, u, y),
               ContractViolation);
}

TEST(ToyJointTarget, MarginalOfUMatchesScalarTarget) {
  const ToyJointTarget joint(dataset());
  const ToyScalarTarget scalar(dataset());
  double offset = 0.0;
  bool first = true;
  for (double u : {-2.0, -1.0, -0.25, 0.0, 0.5, 1.5}) {
    double log_marginal = ToyJointTarget::log_prior_factor(u);
    for (double y : dataset())
      log_marginal += log_integral([&](double x) { return ToyJointTarget::log_factor(u, x, y); }, -15.0, 15.0, 30000);
    const double diff = log_marginal - scalar.log_density(u);
    if (first) offset = diff;
    first = false;
    EXPECT_NEAR(diff, offset, 1e-8) << "u=" << u;
  }
}

TEST(SimulateToyData, VarianceNearTwo) {
  RngStream rng(6);
  const auto y = simulate_toy_data(100, 0.0, rng);
  double m = 0.0, v = 0.0;
  for (double x : y) m += x / 100.0;
  for (double x : y) v += (x - m) * (x - m) / 99.0;
  EXPECT_NEAR(v, 2.0, 0.8);
  RngStream a(7), b(7);
  EXPECT_EQ(simulate_toy_data(20, 0.3, a), simulate_toy_data(20, 0.3, b));
  RngStream c(8);
  const auto one = simulate_toy_data(1, 0.0, c);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(std::isfinite(one[0]));
  EXPECT_THROW(simulate_toy_data(0, 0.0, c), ConfigError);
}

TEST(SimulateToyData, ReferenceDatasetMatchesShippedFile) {
  std::ifstream in(std::string(GMH_SOURCE_DIR) + "/data/toy_dataset.csv");
  ASSERT_TRUE(in.good());
  std::vector<double> shipped;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') shipped.push_back(std::stod(line));
  EXPECT_EQ(shipped, dataset());
}

TEST(Kalman, SingleStepClosedForm) {
  const LinearGaussianSSM m{0.5, 0.3, 1.7, 0.4};
  const double y = 0.9, s = 1.7 + 0.4;
  EXPECT_NEAR(kalman_log_likelihood(m, {y}), -0.5 * (kLog2Pi + std::log(s) + y * y / s), 1e-14);
}

TEST(Kalman, ToyModelAsStateSpaceModel) {
  const ToyScalarTarget scalar(dataset());
  for (double u : {-1.0, 0.0, 0.8}) {
    const LinearGaussianSSM m{0.0, 1.0, 1.0, std::exp(u)};
    const double prior = -0.5 * u * u - 0.5 * kLog2Pi;
    const double tt = static_cast<double>(dataset().size());
    // the scalar density omits the T/2 log(2 pi) constant of the likelihood
    EXPECT_NEAR(kalman_log_likelihood(m, dataset()) + prior + 0.5 * tt * kLog2Pi, scalar.log_density(u), 1e-9);
  }
}

TEST(Kalman, LikelihoodFallsAsNoiseVanishesWithMismatchedData) {
  const std::vector<double> y{3.0, -3.0, 3.0};
  LinearGaussianSSM m{0.9, 0.01, 1.0, 1.0};
  double prev = kalman_log_likelihood(m, y);
  for (int k = 0; k < 30; ++k) {
    m.r *= 0.5;
    const double ll = kalman_log_likelihood(m, y);
    EXPECT_LT(ll, prev) << "r=" << m.r;
    prev = ll;
  }
  m.q = -1.0;
  EXPECT_THROW(kalman_log_likelihood(m, y), ConfigError);
}

TEST(Kalman, MatchesBruteForceGaussianMarginal) {
  // y ~ N(0, P + r I) with P the stationary-start state covariance
  const LinearGaussianSSM m{0.7, 0.5, 1.2, 0.3};
  const std::vector<double> y{0.3, -1.1, 0.8, 2.0};
  const Index n = 4;
  Matrix p(n, n);
  std::vector<double> var(4);
  var[0] = m.p1;
  for (Index t = 1; t < n; ++t) var[static_cast<std::size_t>(t)] = m.a * m.a * var[static_cast<std::size_t>(t - 1)] + m.q;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const Index lo = std::min(i, j);
      p(i, j) = std::pow(m.a, static_cast<double>(std::abs(i - j))) * var[static_cast<std::size_t>(lo)];
    }
  const Matrix s = p + m.r * Matrix::Identity(n, n);
  const Vector yv = Eigen::Map<const Vector>(y.data(), n);
  const double expected = -0.5 * (n * kLog2Pi + std::log(s.determinant()) + yv.dot(s.inverse() * yv));
  EXPECT_NEAR(kalman_log_likelihood(m, y), expected, 1e-12);
}

TEST(StudentT, DensityAndGradient) {
  const TargetDensity t = student_t_target(3.0, 1.0, 2.0);
  const Vector x = Vector::Constant(1, 2.5);
  EXPECT_NEAR(t(x), -2.0 * std::log1p(0.75 * 0.75 / 3.0), 1e-14);
  EXPECT_NEAR(t.gradient(x)[0], finite_difference_gradient(t, x)[0], 1e-6);
  EXPECT_THROW(student_t_target(0.0), ConfigError);
}

}  // namespace
}  // namespace gmh
