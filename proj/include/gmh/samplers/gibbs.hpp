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
#include <any>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "gmh/core.hpp"
#include "gmh/mappings.hpp"
#include "gmh/samplers/slice.hpp"

namespace gmh {

/// Draws new values for a block given the full current position.
using ExactConditionalSampler = std::function<Vector(const Vector& theta, RngStream& rng)>;

/// Updates the coordinates in one block while all others stay fixed.
///
/// With an exact conditional sampler the move is a Gibbs swap and is always
/// accepted. Otherwise the inner kernel runs on the conditional target,
/// evaluated through the full joint with the off-block coordinates frozen.
class MhWithinGibbs {
 public:
  MhWithinGibbs(std::vector<Index> block, AnyKernel inner) : block_(std::move(block)), inner_(std::move(inner)) {
    if (!inner_) throw ConfigError("MH-within-Gibbs: empty inner kernel");
    check_block();
  }
  MhWithinGibbs(std::vector<Index> block, ExactConditionalSampler exact)
      : block_(std::move(block)), exact_(std::move(exact)) {
    if (!exact_) throw ConfigError("MH-within-Gibbs: empty conditional sampler");
    check_block();
  }

  const std::vector<Index>& block() const { return block_; }

  struct Scratch {
    std::any inner;
  };

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const Index n = state.position.size();
    for (Index i : block_)
      if (i >= n) throw ConfigError("MH-within-Gibbs: block index out of range");

    if (exact_) {
      const GibbsSwapMap swap(block_, n);
      const Vector v = exact_(state.position, rng);
      const ExtendedPoint mapped = swap.apply({state.position, v});
      const double lp = target(mapped.theta);
      if (lp == kNegInf) throw ContractViolation("exact conditional sampler produced a zero-density point");
      state.position = mapped.theta;
      state.log_density = lp;
      return {true, 1, 0.0};
    }

    auto* scratch = std::any_cast<Scratch>(&state.scratch);
    if (scratch == nullptr) {
      state.scratch = Scratch{};
      scratch = std::any_cast<Scratch>(&state.scratch);
    }
    const TargetDensity conditional = conditional_target(target, block_, state.position);
    ChainState sub(extract(state.position), state.log_density);
    sub.iteration = state.iteration;
    std::swap(sub.scratch, scratch->inner);
    const KernelStep s = inner_.step(sub, conditional, rng);
    std::swap(sub.scratch, scratch->inner);
    for (std::size_t i = 0; i < block_.size(); ++i) state.position[block_[i]] = sub.position[static_cast<Index>(i)];
    state.log_density = sub.log_density;
    return s;
  }

 private:
  void check_block() const {
    if (block_.empty()) throw ConfigError("MH-within-Gibbs: empty block");
    std::vector<Index> sorted = block_;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0 || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("MH-within-Gibbs: invalid block");
  }
  Vector extract(const Vector& theta) const {
    Vector out(static_cast<Index>(block_.size()));
    for (std::size_t i = 0; i < block_.size(); ++i) out[static_cast<Index>(i)] = theta[block_[i]];
    return out;
  }

  std::vector<Index> block_;
  AnyKernel inner_;
  ExactConditionalSampler exact_;
};

/// Applies a fixed sequence of kernels once each per step. Every component
/// keeps its own scratch slot.
class GibbsSweep {
 public:
  explicit GibbsSweep(std::vector<AnyKernel> kernels) : kernels_(std::move(kernels)) {
    if (kernels_.empty()) throw ConfigError("Gibbs sweep: no component kernels");
  }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    if (std::any_cast<std::vector<std::any>>(&state.scratch) == nullptr)
      state.scratch = std::vector<std::any>(kernels_.size());
    KernelStep total{true, 0, 0.0};
    std::any own;
    std::swap(own, state.scratch);
    auto& slot_ref = *std::any_cast<std::vector<std::any>>(&own);
    for (std::size_t i = 0; i < kernels_.size(); ++i) {
      std::swap(state.scratch, slot_ref[i]);
      const KernelStep s = kernels_[i].step(state, target, rng);
      std::swap(state.scratch, slot_ref[i]);
      total.accepted = total.accepted && s.accepted;
      total.proposals_evaluated += s.proposals_evaluated;
      total.log_alpha = std::min(total.log_alpha, s.log_alpha);
    }
    std::swap(own, state.scratch);
    return total;
  }

 private:
  std::vector<AnyKernel> kernels_;
};

/// Solver for the set of values of one coordinate satisfying every factor
/// constraint log l_n(theta) >= log h_n; returns the interval [lower, upper].
using IntervalSolver =
    std::function<std::pair<double, double>(const Vector& theta, Index coordinate, const std::vector<double>& log_heights)>;

/// One factor l_n(theta) of a factorized target and the coordinates it reads
/// (empty = all coordinates).
struct AuxiliaryFactor {
  LogDensityFn log_factor;
  std::vector<Index> depends_on;
};

struct CoordinateUpdate {
  Index coordinate = 0;
  IntervalSolver solver;  // exact slice interval; stepping-out when empty
  double width = 1.0;
};

/// Auxiliary-variable Gibbs sampler with one slice height per factor:
/// log h_n = log l_n(theta) - Exp(1), then each listed coordinate is drawn
/// uniformly from {x : l_n(theta with x) >= h_n for all n}.
class AuxiliaryGibbs {
 public:
  AuxiliaryGibbs(std::vector<AuxiliaryFactor> factors, std::vector<CoordinateUpdate> updates)
      : factors_(std::move(factors)), updates_(std::move(updates)) {
    if (factors_.empty()) throw ConfigError("auxiliary Gibbs: no factors");
    if (updates_.empty()) throw ConfigError("auxiliary Gibbs: no coordinate updates");
    for (const auto& f : factors_)
      if (!f.log_factor) throw ConfigError("auxiliary Gibbs: empty factor evaluator");
    for (const auto& u : updates_) {
      if (u.coordinate < 0) throw ConfigError("auxiliary Gibbs: negative coordinate");
      if (!u.solver && !(u.width > 0.0)) throw ConfigError("auxiliary Gibbs: width must be positive");
      std::vector<std::size_t> relevant;
      for (std::size_t n = 0; n < factors_.size(); ++n) {
        const auto& d = factors_[n].depends_on;
        if (d.empty() || std::find(d.begin(), d.end(), u.coordinate) != d.end()) relevant.push_back(n);
      }
      relevant_.push_back(std::move(relevant));
    }
  }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    const Index dim = state.position.size();
    std::vector<double> log_h(factors_.size());
    for (std::size_t n = 0; n < factors_.size(); ++n) {
      const double lf = factors_[n].log_factor(state.position);
      if (!(lf > kNegInf)) throw ContractViolation("auxiliary Gibbs: current point violates a factor");
      log_h[n] = lf - rng.exponential();
    }

    std::int64_t evaluations = 0;
    for (std::size_t k = 0; k < updates_.size(); ++k) {
      const CoordinateUpdate& u = updates_[k];
      if (u.coordinate >= dim) throw ConfigError("auxiliary Gibbs: coordinate out of range");
      const auto& relevant = relevant_[k];
      if (u.solver) {
        const auto [lo, hi] = u.solver(state.position, u.coordinate, log_h);
        if (!(lo <= hi)) throw ContractViolation("auxiliary Gibbs: empty slice interval");
        state.position[u.coordinate] = lo + (hi - lo) * rng.uniform();
        ++evaluations;
        continue;
      }
      // slack(r) = min_n log l_n - log h_n along the coordinate; slice is slack >= 0
      Vector probe = state.position;
      const double x0 = state.position[u.coordinate];
      auto slack = [&](double r) {
        probe[u.coordinate] = x0 + r * u.width;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t n : relevant) {
          m = std::min(m, factors_[n].log_factor(probe) - log_h[n]);
          if (m < 0.0) break;
        }
        return m;
      };
      const LineSliceResult line = sample_line_slice(slack, 0.0, rng);
      state.position[u.coordinate] = x0 + line.r * u.width;
      evaluations += line.evaluations;
    }
    state.log_density = target(state.position);
    if (state.log_density == kNegInf) throw ContractViolation("auxiliary Gibbs moved to a zero-density point");
    return {true, std::max<std::int64_t>(evaluations, 1), 0.0};
  }

 private:
  std::vector<AuxiliaryFactor> factors_;
  std::vector<CoordinateUpdate> updates_;
  std::vector<std::vector<std::size_t>> relevant_;
};

}  // namespace gmh
