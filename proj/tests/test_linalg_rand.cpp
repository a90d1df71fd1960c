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

#include <string>
#include <vector>

#include "gmh/linalg.hpp"
#include "gmh/log.hpp"
#include "gmh/rng.hpp"
#include "test_support.hpp"

namespace gmh {
namespace {

TEST(Cholesky, IdentityFactorsToIdentity) {
  const auto r = cholesky_spd(Matrix::Identity(3, 3));
  EXPECT_TRUE(r.lower.isApprox(Matrix::Identity(3, 3)));
  EXPECT_EQ(r.jitter, 0.0);
}

TEST(Cholesky, HandFactorizedTwoByTwo) {
  Matrix a(2, 2);
  a << 4, 2, 2, 3;
  Matrix expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  const auto r = cholesky_spd(a);
  EXPECT_LT((r.lower - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Cholesky, RankDeficientSucceedsWithLoggedJitter) {
  std::vector<std::string> messages;
  log::set_sink([&](log::Level, std::string_view m) { messages.emplace_back(m); });
  Matrix a(2, 2);
  a << 1, 1, 1, 1;
  const auto r = cholesky_spd(a);
  log::set_sink({});
  EXPECT_GT(r.jitter, 0.0);
  EXPECT_LE(r.jitter, 1e-6);
  EXPECT_LT((r.lower * r.lower.transpose() - a).cwiseAbs().maxCoeff(), 1e-5);
  ASSERT_FALSE(messages.empty());
  EXPECT_NE(messages.front().find("jitter"), std::string::npos);
}

TEST(Cholesky, RejectsAsymmetricAndIndefinite) {
  Matrix asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(cholesky_spd(asym), ConfigError);
  Matrix neg(2, 2);
  neg << -1, 0, 0, 1;
  EXPECT_THROW(cholesky_spd(neg), NumericalError);
}

TEST(MvnSample, ZeroFactorReturnsMean) {
  RngStream rng(1);
  const Vector mean = Vector::LinSpaced(3, -1.0, 1.0);
  EXPECT_EQ(mvn_sample(mean, Matrix::Zero(3, 3), rng), mean);
}

TEST(MvnSample, CovarianceWithinFourStandardErrors) {
  RngStream rng(2);
  const Matrix cov = testing::correlated_covariance();
  const Matrix lower = cholesky_spd(cov).lower;
  const int m = 100000;
  Matrix draws(m, 2);
  for (int i = 0; i < m; ++i) draws.row(i) = mvn_sample(Vector::Zero(2), lower, rng).transpose();
  const auto [mean, sample_cov] = sample_moments(draws);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      // Var of a product of jointly normal variables: S_ii S_jj + S_ij^2
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / m);
      EXPECT_LT(std::abs(sample_cov(i, j) - cov(i, j)), 4 * se) << i << "," << j;
    }
}

TEST(MvnSample, WhitenedDrawsAreStandardNormal) {
  RngStream rng(3);
  const Matrix lower = cholesky_spd(testing::correlated_covariance()).lower;
  const Vector mean = Vector::Constant(2, 3.0);
  const int m = 50000;
  Matrix z(m, 2);
  for (int i = 0; i < m; ++i)
    z.row(i) = lower.triangularView<Eigen::Lower>().solve(mvn_sample(mean, lower, rng) - mean).transpose();
  const auto [zm, zc] = sample_moments(z);
  EXPECT_LT(zm.cwiseAbs().maxCoeff(), 4.0 / std::sqrt(m));
  EXPECT_LT((zc - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 4.0 * std::sqrt(2.0 / m));
}

TEST(MvnSample, ReproducibleAndChecksDimensions) {
  RngStream a(9), b(9);
  const Matrix lower = Matrix::Identity(2, 2);
  EXPECT_EQ(mvn_sample(Vector::Zero(2), lower, a), mvn_sample(Vector::Zero(2), lower, b));
  EXPECT_THROW(mvn_sample(Vector::Zero(3), lower, a), ConfigError);
}

TEST(EllipsoidUniform, OneDimensionalUniformMoments) {
  RngStream rng(4);
  const int m = 100000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < m; ++i) {
    const double v = ellipsoid_uniform(Matrix::Identity(1, 1), 1.0, rng)[0];
    ASSERT_LE(std::abs(v), 1.0);
    sum += v;
    sum_sq += v * v;
  }
  EXPECT_NEAR(sum / m, 0.0, 0.01);
  EXPECT_NEAR(sum_sq / m - (sum / m) * (sum / m), 1.0 / 3.0, 0.01);
}

TEST(EllipsoidUniform, MembershipAndRadialLaw) {
  RngStream rng(5);
  Matrix sigma(3, 3);
  sigma << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const Matrix lower = cholesky_spd(sigma).lower;
  const double rho = 2.5;
  std::vector<double> radii;
  for (int i = 0; i < 20000; ++i) {
    const Vector v = ellipsoid_uniform(lower, rho, rng);
    const double q = v.dot(sigma * v);
    ASSERT_LE(q, rho * (1 + 1e-12));
    // back to the unit ball: y = L^T v / sqrt(rho)
    radii.push_back((lower.transpose() * v).norm() / std::sqrt(rho));
  }
  EXPECT_LT(testing::ks_statistic(radii, [](double r) { return r * r * r; }), 0.015);
}

TEST(EllipsoidUniform, CovarianceFormMembership) {
  RngStream rng(6);
  const Matrix c = testing::correlated_covariance();
  const Matrix lower = cholesky_spd(c).lower;
  for (int i = 0; i < 1000; ++i) {
    const Vector v = ellipsoid_uniform_covariance_form(lower, 0.7, rng);
    EXPECT_LE(v.dot(c.ldlt().solve(v)), 0.7 * (1 + 1e-12));
  }
}

TEST(EllipsoidUniform, RejectsNonPositiveRadius) {
  RngStream rng(7);
  EXPECT_THROW(ellipsoid_uniform(Matrix::Identity(2, 2), 0.0, rng), ContractViolation);
  EXPECT_THROW(ellipsoid_uniform(Matrix::Identity(2, 2), -1.0, rng), ContractViolation);
}

TEST(RngStream, OpenUnitIntervalAndReproducibility) {
  RngStream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const double u = a.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_EQ(u, b.uniform());
    differs = differs || u != c.uniform();
  }
  EXPECT_TRUE(differs);
}

TEST(RngStream, SubstreamsAreDistinctAndStable) {
  const RngStream root(11);
  RngStream s0 = root.substream(0), s1 = root.substream(1), s0b = root.substream(0);
  const double x0 = s0.uniform();
  EXPECT_NE(x0, s1.uniform());
  EXPECT_EQ(x0, s0b.uniform());
}

TEST(RngStream, ExponentialHasUnitMean) {
  RngStream rng(12);
  double sum = 0;
  const int m = 100000;
  for (int i = 0; i < m; ++i) sum += rng.exponential();
  EXPECT_NEAR(sum / m, 1.0, 4.0 / std::sqrt(m));
}

}  // namespace
}  // namespace gmh
