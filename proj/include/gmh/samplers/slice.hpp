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
#include <optional>
#include <sstream>
#include <vector>

#include "gmh/core.hpp"
#include "gmh/log.hpp"

namespace gmh {

/// Bracket [a, b] on the line parameter r, with procedure counters.
struct SliceInterval {
  double a = 0.0;
  double b = 0.0;
  int expansion_count = 0;
  int shrink_count = 0;
};

struct LineSliceResult {
  double r = 0.0;
  double log_density = kNegInf;
  SliceInterval interval;
  std::int64_t evaluations = 0;
};

struct SliceLimits {
  int max_expansions = 1000;  // unit steps per side
  int max_shrinks = 1000;
};

/// Stepping-out and shrinkage along r for a slice {r : f(r) >= log_h}, where
/// r = 0 is the current point (assumed inside the slice).
///
/// The bracket starts at [u - 1, u], steps out one unit at a time while an
/// endpoint lies in the slice, then r ~ U[a, b] is drawn and on rejection
/// the endpoint on the side of r is moved to r.
template <class LineDensity>
LineSliceResult sample_line_slice(const LineDensity& f, double log_h, RngStream& rng,
                                  SliceLimits limits = {}) {
  LineSliceResult out;
  const double u = rng.uniform();
  SliceInterval& iv = out.interval;
  iv.a = u - 1.0;
  iv.b = u;

  int steps = 0;
  while (true) {
    ++out.evaluations;
    if (!(f(iv.a) >= log_h)) break;
    if (steps == limits.max_expansions) {
      log::info("slice stepping-out hit the expansion cap on the lower side; interval truncated");
      break;
    }
    iv.a -= 1.0;
    ++steps;
  }
  iv.expansion_count = steps;
  steps = 0;
  while (true) {
    ++out.evaluations;
    if (!(f(iv.b) >= log_h)) break;
    if (steps == limits.max_expansions) {
      log::info("slice stepping-out hit the expansion cap on the upper side; interval truncated");
      break;
    }
    iv.b += 1.0;
    ++steps;
  }
  iv.expansion_count += steps;

  while (true) {
    const double r = iv.a + (iv.b - iv.a) * rng.uniform();
    const double lp = f(r);
    ++out.evaluations;
    if (lp >= log_h) {
      out.r = r;
      out.log_density = lp;
      return out;
    }
    if (++iv.shrink_count > limits.max_shrinks)
      throw ContractViolation("slice shrinkage exceeded the iteration cap; current point outside its own slice?");
    if (r >= 0.0)
      iv.b = r;
    else
      iv.a = r;
  }
}

/// Univariate slice updates along coordinate axes or a fixed direction.
///
/// A sweep visits the listed lines in order. With shared_height the slice
/// level is drawn once per sweep; otherwise once per line.
class UnivariateSlice {
 public:
  /// Slice along coordinate j with width w.
  static UnivariateSlice coordinate(Index j, double width) {
    UnivariateSlice s;
    s.coordinates_ = {j};
    s.widths_ = {width};
    s.validate();
    return s;
  }

  /// Sweep over all coordinates in order, same width on each.
  static UnivariateSlice sweep(double width, bool shared_height = false) {
    UnivariateSlice s;
    s.widths_ = {width};
    s.shared_height_ = shared_height;
    s.validate();
    return s;
  }

  /// Sweep over all coordinates with per-coordinate widths.
  static UnivariateSlice sweep(std::vector<double> widths, bool shared_height = false) {
    UnivariateSlice s;
    s.widths_ = std::move(widths);
    s.shared_height_ = shared_height;
    s.validate();
    return s;
  }

  /// Slice along theta + r * width * direction.
  static UnivariateSlice along(Vector direction, double width) {
    if (direction.size() == 0 || direction.norm() == 0.0) throw ConfigError("slice: zero direction");
    UnivariateSlice s;
    s.direction_ = std::move(direction);
    s.widths_ = {width};
    s.validate();
    return s;
  }

  UnivariateSlice& limits(SliceLimits l) {
    limits_ = l;
    return *this;
  }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const Index n = state.position.size();
    KernelStep result{true, 0, 0.0};
    double log_h = 0.0;
    bool have_height = false;
    auto update_line = [&](const Vector& dir) {
      if (!shared_height_ || !have_height) {
        log_h = state.log_density - rng.exponential();
        have_height = true;
      }
      auto f = [&](double r) { return target(state.position + r * dir); };
      const LineSliceResult line = sample_line_slice(f, log_h, rng, limits_);
      state.position += line.r * dir;
      state.log_density = line.log_density;
      result.proposals_evaluated += line.evaluations;
    };

    if (direction_) {
      if (direction_->size() != n) throw ConfigError("slice: direction dimension mismatch");
      update_line(*direction_ * widths_[0]);
    } else if (!coordinates_.empty()) {
      for (Index j : coordinates_) {
        if (j < 0 || j >= n) throw ConfigError("slice: coordinate out of range");
        update_line(Vector::Unit(n, j) * width_for(0));
      }
    } else {
      if (widths_.size() != 1 && static_cast<Index>(widths_.size()) != n)
        throw ConfigError("slice: widths must have one entry per coordinate");
      for (Index j = 0; j < n; ++j) update_line(Vector::Unit(n, j) * width_for(static_cast<std::size_t>(j)));
    }
    return result;
  }

 private:
  UnivariateSlice() = default;

  void validate() const {
    if (widths_.empty()) throw ConfigError("slice: width required");
    for (double w : widths_)
      if (!(w > 0.0)) throw ConfigError("slice: width must be positive");
  }
  double width_for(std::size_t j) const { return widths_.size() == 1 ? widths_[0] : widths_[j]; }

  std::vector<Index> coordinates_;
  std::optional<Vector> direction_;
  std::vector<double> widths_;
  bool shared_height_ = false;
  SliceLimits limits_;
};

/// Proposal sequence V_n ~ N(mean(C_1..C_n), S / n) with C_i ~ N(0, S):
/// the n-th proposal is centered on the running mean of the reference draws.
class RecursiveGaussianProposals {
 public:
  RecursiveGaussianProposals(const Matrix& lower, RngStream& rng) : lower_(lower), rng_(rng) {
    sum_ = Vector::Zero(lower.rows());
  }

  Vector next() {
    const Index d = lower_.rows();
    ++count_;
    sum_ += lower_.triangularView<Eigen::Lower>() * standard_normal(d, rng_);
    const double n = static_cast<double>(count_);
    return sum_ / n + (lower_.triangularView<Eigen::Lower>() * standard_normal(d, rng_)) / std::sqrt(n);
  }

  std::int64_t count() const { return count_; }

 private:
  const Matrix& lower_;
  RngStream& rng_;
  Vector sum_;
  std::int64_t count_ = 0;
};

/// Slice sampler with recursively generated Gaussian proposals around theta;
/// the first proposal inside the slice is returned (unity acceptance).
class RecursiveGaussianSlice {
 public:
  explicit RecursiveGaussianSlice(const Matrix& scale_matrix, std::int64_t max_proposals = 10000)
      : lower_(cholesky_spd(scale_matrix).lower), max_proposals_(max_proposals) {
    if (max_proposals_ < 1) throw ConfigError("recursive slice: proposal cap must be positive");
  }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    if (lower_.rows() != state.position.size()) throw ConfigError("recursive slice: dimension mismatch");
    const double log_h = state.log_density - rng.exponential();
    RecursiveGaussianProposals proposals(lower_, rng);
    while (proposals.count() < max_proposals_) {
      const Vector xi = state.position + proposals.next();
      const double lp = target(xi);
      if (lp >= log_h) {
        state.position = xi;
        state.log_density = lp;
        return {true, proposals.count(), 0.0};
      }
    }
    throw ContractViolation("recursive Gaussian slice exceeded the proposal cap");
  }

 private:
  Matrix lower_;
  std::int64_t max_proposals_;
};

/// Slice sampling along a random line theta + r v. Inside an ensemble v is
/// the difference of two other chains' previous-generation positions, which
/// makes the kernel affine invariant; a lone chain uses v ~ N(0, scale^2 I).
class DirectionalSlice {
 public:
  explicit DirectionalSlice(double width = 1.0, double isotropic_scale = 1.0)
      : width_(width), scale_(isotropic_scale) {
    if (!(width_ > 0.0) || !(scale_ > 0.0)) throw ConfigError("directional slice: width and scale must be positive");
  }

  std::size_t min_ensemble_size() const { return 3; }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const Vector v = scale_ * standard_normal(state.position.size(), rng);
    return along(state, target, rng, v);
  }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng, const EnsembleView& view) const {
    const std::size_t m = view.size();
    if (m < 3) throw ConfigError("directional slice needs at least 3 chains");
    std::size_t j = static_cast<std::size_t>(rng.index(m - 1));
    if (j >= view.self) ++j;
    std::size_t k = static_cast<std::size_t>(rng.index(m - 2));
    for (std::size_t skip : {std::min(view.self, j), std::max(view.self, j)})
      if (k >= skip) ++k;
    return along(state, target, rng, view[j] - view[k]);
  }

 private:
  KernelStep along(ChainState& state, const TargetDensity& target, RngStream& rng, const Vector& v) const {
    if (v.size() != state.position.size()) throw ConfigError("directional slice: direction dimension mismatch");
    if (v.squaredNorm() == 0.0) throw ConfigError("directional slice: degenerate zero direction");
    const Vector dir = width_ * v;
    const double log_h = state.log_density - rng.exponential();
    auto f = [&](double r) { return target(state.position + r * dir); };
    const LineSliceResult line = sample_line_slice(f, log_h, rng);
    state.position += line.r * dir;
    state.log_density = line.log_density;
    return {true, line.evaluations, 0.0};
  }

  double width_;
  double scale_;
};

}  // namespace gmh
