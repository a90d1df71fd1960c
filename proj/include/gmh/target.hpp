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
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmh/error.hpp"
#include "gmh/linalg.hpp"

namespace gmh {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using LogDensityFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;

/// Unnormalized log density log pi~(theta) with an optional gradient.
///
/// Evaluation outside the support must give -inf; a NaN from the user
/// function is turned into a ContractViolation at the call site.
class TargetDensity {
 public:
  TargetDensity() = default;
  TargetDensity(Index dimension, LogDensityFn log_density, GradientFn gradient = {})
      : dimension_(dimension), log_density_(std::move(log_density)), gradient_(std::move(gradient)) {
    if (dimension_ < 1) throw ConfigError("TargetDensity: dimension must be positive");
    if (!log_density_) throw ConfigError("TargetDensity: log density function required");
  }

  Index dimension() const { return dimension_; }
  bool has_gradient() const { return static_cast<bool>(gradient_); }

  double log_density(const Vector& theta) const {
    if (theta.size() != dimension_) throw ConfigError("TargetDensity: dimension mismatch");
    const double value = log_density_(theta);
    if (std::isnan(value)) throw ContractViolation("target log density returned NaN");
    if (value == std::numeric_limits<double>::infinity())
      throw ContractViolation("target log density returned +inf");
    return value;
  }

  double operator()(const Vector& theta) const { return log_density(theta); }

  Vector gradient(const Vector& theta) const {
    if (!gradient_) throw ConfigError("TargetDensity: gradient not available");
    return gradient_(theta);
  }

 private:
  Index dimension_ = 0;
  LogDensityFn log_density_;
  GradientFn gradient_;
};

/// Conditional of `target` on the coordinates in `block`, with every other
/// coordinate frozen at the values in `anchor`. Evaluates the full joint.
inline TargetDensity conditional_target(const TargetDensity& target, std::vector<Index> block,
                                        Vector anchor) {
  const auto dim = static_cast<Index>(block.size());
  auto embed = [block, anchor](const Vector& sub) {
    Vector full = anchor;
    for (std::size_t i = 0; i < block.size(); ++i) full[block[i]] = sub[static_cast<Index>(i)];
    return full;
  };
  LogDensityFn f = [target, embed](const Vector& sub) { return target.log_density(embed(sub)); };
  GradientFn g;
  if (target.has_gradient()) {
    g = [target, embed, block](const Vector& sub) {
      const Vector full = target.gradient(embed(sub));
      Vector out(static_cast<Index>(block.size()));
      for (std::size_t i = 0; i < block.size(); ++i) out[static_cast<Index>(i)] = full[block[i]];
      return out;
    };
  }
  return {dim, std::move(f), std::move(g)};
}

/// Central finite-difference gradient, used to validate analytic gradients.
inline Vector finite_difference_gradient(const TargetDensity& target, const Vector& theta,
                                         double step = 1e-5) {
  Vector g(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    Vector hi = theta, lo = theta;
    const double h = step * std::max(1.0, std::abs(theta[i]));
    hi[i] += h;
    lo[i] -= h;
    g[i] = (target(hi) - target(lo)) / (2.0 * h);
  }
  return g;
}

}  // namespace gmh
