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
#include <string>
#include <vector>

#include "gmh/diagnostics.hpp"
#include "gmh/io.hpp"
#include "gmh/rng.hpp"
#include "gmh/targets.hpp"
#include "test_support.hpp"

namespace gmh {
namespace {

std::vector<double> iid(std::size_t m, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> x(m);
  for (auto& v : x) v = rng.normal();
  return x;
}

TEST(Iact, IidSeriesNearOne) {
  EXPECT_NEAR(iact_sokal(iid(100000, 1)).tau, 1.0, 0.1);
  RngStream rng(2);
  EXPECT_NEAR(iact_sokal(testing::ar1_series(0.0, 100000, rng)).tau, 1.0, 0.1);
}

TEST(Iact, Ar1MatchesAnalyticValue) {
  RngStream rng(3);
  const auto x = testing::ar1_series(0.9, 1000000, rng);
  const IactEstimate est = iact_sokal(x);
  EXPECT_NEAR(est.tau, 19.0, 2.0);
  EXPECT_GE(static_cast<double>(est.window), kSokalWindowFactor * est.tau);
  EXPECT_EQ(est.autocorrelations.size(), static_cast<std::size_t>(est.window) + 1);
  EXPECT_DOUBLE_EQ(est.autocorrelations[0], 1.0);
  EXPECT_NEAR(ess(x), 1e6 / 19.0, 0.1 * 1e6 / 19.0);
}

TEST(Iact, AutocorrelationMatchesDirectSum) {
  const auto x = iid(300, 4);
  const auto rho = autocorrelation(x);
  double mean = 0.0;
  for (double v : x) mean += v / 300.0;
  auto acov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < x.size(); ++i) s += (x[i] - mean) * (x[i + k] - mean);
    return s / 300.0;
  };
  for (std::size_t k : {1, 2, 5, 50, 299}) EXPECT_NEAR(rho[k], acov(k) / acov(0), 1e-12);
}

TEST(Ess, IidWithinTenPercent) { EXPECT_NEAR(ess(iid(10000, 5)), 10000.0, 1000.0); }

TEST(Ess, AlternatingSeriesExceedsLength) {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 == 0 ? 1.0 : -1.0;
  const IactEstimate est = iact_sokal(x);
  EXPECT_LT(est.tau, 1.0);
  EXPECT_GT(est.tau, 0.0);
  EXPECT_GT(ess(x), 1000.0);
}

TEST(Iact, ErrorsOnDegenerateInput) {
  EXPECT_THROW(iact_sokal(std::vector<double>(500, 3.0)), NumericalError);
  EXPECT_THROW(iact_sokal(iid(99, 6)), ConfigError);
  auto bad = iid(200, 7);
  bad[50] = std::nan("");
  EXPECT_THROW(iact_sokal(bad), ContractViolation);
  try {
    iact_sokal(std::vector<double>(500, 3.0));
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("zero variance"), std::string::npos);
  }
}

TEST(Iact, AffineInvariance) {
  RngStream rng(8);
  const auto x = testing::ar1_series(0.7, 20000, rng);
  const double base = iact_sokal(x).tau;
  for (auto [a, b] : {std::pair{2.0, 0.0}, {-3.5, 10.0}, {1e-3, -7.0}, {1e4, 1e3}}) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    const IactEstimate e = iact_sokal(y);
    EXPECT_NEAR(e.tau, base, 1e-10 * base) << "a=" << a << " b=" << b;
    EXPECT_EQ(e.window, iact_sokal(x).window);
  }
}

TEST(Iact, BatchMeansAgreesWithSokal) {
  for (double phi : {0.3, 0.6, 0.8}) {
    RngStream rng(9);
    const auto x = testing::ar1_series(phi, 200000, rng);
    const double sokal = iact_sokal(x).tau, batch = batch_means_iact(x);
    EXPECT_LT(std::abs(batch - sokal), 0.25 * sokal) << "phi=" << phi;
  }
}

ChainTrace gaussian_trace(Index m, double sd, std::uint64_t seed, Index dim = 2) {
  RngStream rng(seed);
  ChainTrace t(m, dim);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < dim; ++j) t.samples(i, j) = sd * rng.normal();
  return t;
}

TEST(MomentTest, ExactDrawsPass) {
  int passed = 0;
  for (std::uint64_t s = 0; s < 20; ++s)
    passed += moment_test(gaussian_trace(5000, 1.0, 100 + s), Vector::Zero(2), Matrix::Identity(2, 2)).passed();
  EXPECT_EQ(passed, 20);
}

TEST(MomentTest, DetectsInflatedVariance) {
  const MomentReport r =
      moment_test(gaussian_trace(50000, std::sqrt(2.0), 11), Vector::Zero(2), Matrix::Identity(2, 2));
  EXPECT_FALSE(r.passed());
  for (const auto& row : r.rows) EXPECT_GT(row.z_var, 4.0);
}

TEST(MomentTest, OneRowPerCoordinate) {
  const MomentReport r = moment_test(gaussian_trace(1000, 1.0, 12, 1), Vector::Zero(1), Matrix::Identity(1, 1));
  EXPECT_EQ(r.rows.size(), 1u);
  EXPECT_THROW(moment_test(gaussian_trace(1000, 1.0, 12, 1), Vector::Zero(2), Matrix::Identity(2, 2)), ConfigError);
}

TEST(MomentTest, ReportSerialization) {
  const MomentReport r = moment_test(gaussian_trace(1000, 1.0, 13), Vector::Zero(2), Matrix::Identity(2, 2));
  const std::string csv = io::moment_report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "coordinate,mean,var,tau,ess,z_mean,z_var");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const std::string json = io::moment_report_json(r);
  EXPECT_EQ(std::count(json.begin(), json.end(), '\n'), 2);
  EXPECT_NE(json.find("\"z_var\":"), std::string::npos);
}

TEST(TraceIo, CsvRoundTripIsExact) {
  ChainTrace t = gaussian_trace(500, 1.0, 14, 3);
  for (Index i = 0; i < t.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    t.accepted[k] = i % 3 == 0;
    t.log_density[k] = -0.5 * t.samples.row(i).squaredNorm() + 1e-17 * static_cast<double>(i);
    t.proposals_evaluated[k] = 1 + i % 7;
  }
  std::stringstream buf;
  io::write_trace_csv(buf, t);
  const ChainTrace back = io::read_trace_csv(buf);
  EXPECT_EQ(back.samples, t.samples);
  EXPECT_EQ(back.accepted, t.accepted);
  EXPECT_EQ(back.log_density, t.log_density);
  EXPECT_EQ(back.proposals_evaluated, t.proposals_evaluated);
}

TEST(TraceIo, MalformedInputIsRejected) {
  std::stringstream empty;
  EXPECT_THROW(io::read_trace_csv(empty), ContractViolation);
  std::stringstream header_only("iteration,coord_0,log_density,accepted,proposals_evaluated\n");
  EXPECT_THROW(io::read_trace_csv(header_only), ContractViolation);
  std::stringstream bad_field("iteration,coord_0,log_density,accepted,proposals_evaluated\n1,abc,0,1,1\n");
  EXPECT_THROW(io::read_trace_csv(bad_field), ContractViolation);
  std::stringstream bad_header("a,b,c\n1,2,3\n");
  EXPECT_THROW(io::read_trace_csv(bad_header), ContractViolation);
}

TEST(Summary, RowsPerCoordinate) {
  ChainTrace t = gaussian_trace(2000, 1.0, 15, 2);
  for (std::size_t i = 0; i < t.accepted.size(); ++i) t.accepted[i] = i % 2;
  const auto rows = io::summarize_trace(t, "chain");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].acceptance_rate, 0.5);
  EXPECT_NEAR(rows[1].ess, 2000.0 / rows[1].tau, 1e-9);
  const std::string csv = io::summary_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trace,coordinate,mean,var,tau,ess,acceptance_rate");
  EXPECT_NE(io::summary_json(rows).find("\"trace\":\"chain\""), std::string::npos);
}

TEST(FormatDouble, RoundTripsShortest) {
  RngStream rng(16);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.normal() * 5);
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_THROW(io::parse_double("1.5x"), ConfigError);
}

}  // namespace
}  // namespace gmh
