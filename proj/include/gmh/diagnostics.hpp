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
#include <complex>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "gmh/error.hpp"
#include "gmh/linalg.hpp"
#include "gmh/log.hpp"
#include "gmh/trace.hpp"

namespace gmh {

struct IactEstimate {
  double tau = 1.0;
  Index window = 0;
  std::vector<double> autocorrelations;  // rho_0 .. rho_window
};

inline constexpr Index kMinIactLength = 100;
inline constexpr double kSokalWindowFactor = 5.0;

/// Normalized autocorrelations rho_0..rho_{M-1} via FFT, with mean removal
/// and the biased 1/M autocovariance.
inline std::vector<double> autocorrelation(const std::vector<double>& series) {
  const std::size_t m = series.size();
  if (m < 2) throw ConfigError("autocorrelation: series too short");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(m);

  std::size_t n = 1;
  while (n < 2 * m) n <<= 1;
  std::vector<double> padded(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) padded[i] = series[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, padded);
  for (auto& c : spectrum) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spectrum);

  const double c0 = acov[0];
  if (!(c0 > 0.0)) throw NumericalError("autocorrelation: zero variance");
  std::vector<double> rho(m);
  for (std::size_t k = 0; k < m; ++k) rho[k] = acov[k] / c0;
  return rho;
}

/// Integrated autocorrelation time with Sokal's self-consistent window:
/// tau(W) = 1 + 2 sum_{k<=W} rho_k, W the smallest lag with W >= c tau(W).
///
/// Chains with strong negative autocorrelation give tau < 1. The estimate
/// is floored at 1 / log10(M) so that the induced ESS stays bounded.
inline IactEstimate iact_sokal(const std::vector<double>& series, double c = kSokalWindowFactor) {
  const auto m = static_cast<Index>(series.size());
  if (m < kMinIactLength) throw ConfigError("iact: series shorter than " + std::to_string(kMinIactLength));
  for (double v : series)
    if (!std::isfinite(v)) throw ContractViolation("iact: non-finite value in series");
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) throw NumericalError("iact: zero variance");

  const std::vector<double> rho = autocorrelation(series);
  IactEstimate est;
  double tau = 1.0;
  Index w = 1;
  for (; w < m; ++w) {
    tau += 2.0 * rho[static_cast<std::size_t>(w)];
    if (static_cast<double>(w) >= c * tau) break;
  }
  if (w == m) {
    w = m - 1;
    log::warning("iact: no self-consistent window; the chain is too short for a reliable estimate");
  }
  est.window = w;
  est.tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m)));
  est.autocorrelations.assign(rho.begin(), rho.begin() + w + 1);
  return est;
}

inline IactEstimate iact_sokal(const Vector& series, double c = kSokalWindowFactor) {
  return iact_sokal(std::vector<double>(series.data(), series.data() + series.size()), c);
}

/// Effective sample size M / tau.
inline double ess(const std::vector<double>& series) {
  return static_cast<double>(series.size()) / iact_sokal(series).tau;
}
inline double ess(const Vector& series) { return static_cast<double>(series.size()) / iact_sokal(series).tau; }

/// Batch-means IACT: b Var(batch means) / Var(series) with batch length
/// b = floor(sqrt(M)). Used as a cross-check of the spectral estimate.
inline double batch_means_iact(const std::vector<double>& series) {
  const std::size_t m = series.size();
  if (m < static_cast<std::size_t>(kMinIactLength)) throw ConfigError("batch means: series too short");
  const auto b = static_cast<std::size_t>(std::sqrt(static_cast<double>(m)));
  const std::size_t batches = m / b;
  const std::size_t used = batches * b;
  double mean = 0.0;
  for (std::size_t i = 0; i < used; ++i) mean += series[i];
  mean /= static_cast<double>(used);
  double var = 0.0, var_batch = 0.0;
  for (std::size_t i = 0; i < used; ++i) var += (series[i] - mean) * (series[i] - mean);
  var /= static_cast<double>(used - 1);
  for (std::size_t j = 0; j < batches; ++j) {
    double s = 0.0;
    for (std::size_t i = j * b; i < (j + 1) * b; ++i) s += series[i];
    const double d = s / static_cast<double>(b) - mean;
    var_batch += d * d;
  }
  var_batch /= static_cast<double>(batches - 1);
  if (!(var > 0.0)) throw NumericalError("batch means: zero variance");
  return static_cast<double>(b) * var_batch / var;
}

struct MomentRow {
  Index coordinate = 0;
  double mean = 0.0;
  double var = 0.0;
  double tau = 1.0;
  double ess = 0.0;
  double z_mean = 0.0;
  double z_var = 0.0;
};

struct MomentReport {
  std::vector<MomentRow> rows;
  double threshold = 4.0;

  bool passed() const {
    return std::all_of(rows.begin(), rows.end(), [&](const MomentRow& r) {
      return std::abs(r.z_mean) <= threshold && std::abs(r.z_var) <= threshold;
    });
  }
  double max_abs_z() const {
    double z = 0.0;
    for (const auto& r : rows) z = std::max({z, std::abs(r.z_mean), std::abs(r.z_var)});
    return z;
  }
};

/// Per-coordinate z-scores of the sample mean and variance against known
/// target moments, with IACT-corrected standard errors sd sqrt(tau / M).
/// The variance z-score uses the series (x - mu)^2 and its own IACT.
inline MomentReport moment_test(const ChainTrace& trace, const Vector& target_mean, const Matrix& target_cov,
                                double threshold = 4.0) {
  const Index n = trace.dimension();
  if (target_mean.size() != n || target_cov.rows() != n || target_cov.cols() != n)
    throw ConfigError("moment test: target moment dimensions do not match the trace");
  const auto m = static_cast<double>(trace.size());
  MomentReport report;
  report.threshold = threshold;
  for (Index j = 0; j < n; ++j) {
    const Vector x = trace.samples.col(j);
    MomentRow row;
    row.coordinate = j;
    row.mean = x.mean();
    row.var = (x.array() - row.mean).square().sum() / (m - 1.0);
    const IactEstimate ix = iact_sokal(x);
    row.tau = ix.tau;
    row.ess = m / ix.tau;
    row.z_mean = (row.mean - target_mean[j]) / std::sqrt(row.var * ix.tau / m);

    const Vector sq = (x.array() - target_mean[j]).square().matrix();
    const double sq_mean = sq.mean();
    const double sq_var = (sq.array() - sq_mean).square().sum() / (m - 1.0);
    const IactEstimate isq = iact_sokal(sq);
    row.z_var = (sq_mean - target_cov(j, j)) / std::sqrt(sq_var * isq.tau / m);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace gmh
