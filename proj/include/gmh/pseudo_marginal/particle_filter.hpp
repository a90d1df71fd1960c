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
#include <concepts>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

#include "gmh/error.hpp"
#include "gmh/linalg.hpp"
#include "gmh/rng.hpp"
#include "gmh/target.hpp"

namespace gmh {

/// Hidden Markov model with scalar observations, as consumed by the
/// bootstrap particle filter.
template <class M>
concept StateSpaceModel = requires(const M& m, const typename M::state_type& x, double y, RngStream& rng) {
  typename M::state_type;
  { m.sample_initial(rng) } -> std::convertible_to<typename M::state_type>;
  { m.sample_transition(x, rng) } -> std::convertible_to<typename M::state_type>;
  { m.log_observation(y, x) } -> std::convertible_to<double>;
};

template <class M>
concept SimulableStateSpaceModel = StateSpaceModel<M> && requires(const M& m, const typename M::state_type& x, RngStream& rng) {
  { m.sample_observation(x, rng) } -> std::convertible_to<double>;
};

/// Systematic resampling: one uniform offset, N evenly spaced points.
/// Returns ancestor indices; weights need not be normalized.
inline std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, RngStream& rng) {
  const std::size_t n = weights.size();
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> ancestors(n);
  const double step = total / static_cast<double>(n);
  double point = step * rng.uniform();
  double cumulative = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (point > cumulative && j + 1 < n) cumulative += weights[++j];
    ancestors[i] = j;
    point += step;
  }
  return ancestors;
}

/// Bootstrap particle filter estimate of log p(y_1..y_T).
///
/// Particles are propagated through the transition, weighted by the
/// observation density and resampled systematically after every step except
/// the last. The estimate is unbiased in linear scale. Returns -inf if all
/// weights vanish at some step.
template <StateSpaceModel Model>
double bootstrap_particle_filter(const Model& model, const std::vector<double>& y, std::size_t n_particles,
                                 RngStream& rng) {
  if (n_particles < 2) throw ConfigError("particle filter: need at least two particles");
  using State = typename Model::state_type;
  std::vector<State> particles, next;
  particles.reserve(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) particles.push_back(model.sample_initial(rng));
  std::vector<double> log_w(n_particles), w(n_particles);
  double total = 0.0;
  const double log_n = std::log(static_cast<double>(n_particles));

  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t > 0)
      for (auto& p : particles) p = model.sample_transition(p, rng);
    double max_lw = kNegInf;
    for (std::size_t i = 0; i < n_particles; ++i) {
      log_w[i] = model.log_observation(y[t], particles[i]);
      if (std::isnan(log_w[i])) throw ContractViolation("particle filter: NaN observation log density");
      max_lw = std::max(max_lw, log_w[i]);
    }
    if (max_lw == kNegInf) return kNegInf;
    double sum = 0.0;
    for (std::size_t i = 0; i < n_particles; ++i) {
      w[i] = std::exp(log_w[i] - max_lw);
      sum += w[i];
    }
    total += max_lw + std::log(sum) - log_n;
    if (t + 1 < y.size()) {
      const auto ancestors = systematic_resample(w, rng);
      next.clear();
      for (std::size_t a : ancestors) next.push_back(particles[a]);
      std::swap(particles, next);
    }
  }
  return total;
}

/// ABC surrogate for the observation density,
///   log phi((k(y) - k(y~)) / (eps sqrt 2)) - log(eps sqrt 2),
/// a Gaussian kernel on the discrepancy of a summary k.
inline double abc_log_observation_density(double y, double y_sim, const std::function<double(double)>& summary,
                                          double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("ABC: epsilon must be positive");
  const double ky = summary ? summary(y) : y;
  const double ks = summary ? summary(y_sim) : y_sim;
  if (!std::isfinite(ky) || !std::isfinite(ks)) throw ContractViolation("ABC: non-finite summary");
  const double scale = epsilon * std::numbers::sqrt2;
  const double z = (ky - ks) / scale;
  return -0.5 * kLog2Pi - 0.5 * z * z - std::log(scale);
}

/// Sample standard deviation of k(y_t) over the observed series.
inline double abc_default_epsilon(const std::vector<double>& y, const std::function<double(double)>& summary = {}) {
  if (y.size() < 2) throw ConfigError("ABC: need at least two observations for the default epsilon");
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double v : y) {
    const double k = summary ? summary(v) : v;
    ++n;
    const double d = k - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (k - mean);
  }
  const double sd = std::sqrt(m2 / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw ConfigError("ABC: observed summaries are constant");
  return sd;
}

/// Wraps a simulable model so that the particle filter weights by the ABC
/// kernel between observed and simulated data instead of g(y | x).
template <SimulableStateSpaceModel Model>
class AbcStateSpaceModel {
 public:
  struct state_type {
    typename Model::state_type x;
    double y_sim;
  };

  AbcStateSpaceModel(Model model, double epsilon, std::function<double(double)> summary = {})
      : model_(std::move(model)), epsilon_(epsilon), summary_(std::move(summary)) {
    if (!(epsilon_ > 0.0)) throw ConfigError("ABC: epsilon must be positive");
  }

  state_type sample_initial(RngStream& rng) const {
    auto x = model_.sample_initial(rng);
    const double ys = model_.sample_observation(x, rng);
    return {std::move(x), ys};
  }
  state_type sample_transition(const state_type& s, RngStream& rng) const {
    auto x = model_.sample_transition(s.x, rng);
    const double ys = model_.sample_observation(x, rng);
    return {std::move(x), ys};
  }
  double log_observation(double y, const state_type& s) const {
    return abc_log_observation_density(y, s.y_sim, summary_, epsilon_);
  }

 private:
  Model model_;
  double epsilon_;
  std::function<double(double)> summary_;
};

/// Unbiased nonnegative estimator of a density, reported in log scale.
struct LikelihoodEstimator {
  std::function<double(const Vector& theta, RngStream& rng)> estimate;
  double cost_hint = 1.0;  // expected work units per call

  double operator()(const Vector& theta, RngStream& rng) const {
    const double v = estimate(theta, rng);
    if (std::isnan(v)) throw ContractViolation("likelihood estimator returned NaN");
    return v;
  }
};

/// Particle filter estimator for a model family theta -> Model.
template <class Family>
LikelihoodEstimator make_particle_filter_estimator(Family family, std::vector<double> data, std::size_t n_particles) {
  if (n_particles < 2) throw ConfigError("particle filter: need at least two particles");
  const double cost = static_cast<double>(n_particles * data.size());
  return {[family = std::move(family), data = std::move(data), n_particles](const Vector& theta, RngStream& rng) {
            return bootstrap_particle_filter(family(theta), data, n_particles, rng);
          },
          cost};
}

/// Zero-variance estimator from an exact log-likelihood.
inline LikelihoodEstimator exact_estimator(LogDensityFn log_likelihood) {
  return {[f = std::move(log_likelihood)](const Vector& theta, RngStream&) { return f(theta); }, 1.0};
}

}  // namespace gmh
