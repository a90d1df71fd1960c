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
#include <atomic>
#include <barrier>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "gmh/error.hpp"
#include "gmh/linalg.hpp"
#include "gmh/rng.hpp"
#include "gmh/target.hpp"
#include "gmh/trace.hpp"

namespace gmh {

/// Position of one chain together with its cached log density and any
/// adaptive state the kernel keeps between iterations.
struct ChainState {
  Vector position;
  double log_density = kNegInf;
  std::uint64_t iteration = 0;
  std::any scratch;

  ChainState() = default;
  ChainState(Vector p, double lp) : position(std::move(p)), log_density(lp) {}
};

/// Outcome of one kernel application. The state is updated in place.
struct KernelStep {
  bool accepted = false;
  std::int64_t proposals_evaluated = 1;
  double log_alpha = 0.0;
};

/// min(0, lp - lc + log|J|), the log acceptance probability.
inline double log_acceptance_probability(double log_joint_current, double log_joint_proposed,
                                         double log_abs_jacobian) {
  if (std::isnan(log_joint_current) || std::isnan(log_joint_proposed) || std::isnan(log_abs_jacobian))
    throw ContractViolation("acceptance: NaN input");
  if (log_joint_current == kNegInf) throw ContractViolation("acceptance: current state has zero density");
  if (log_joint_proposed == kNegInf) return kNegInf;
  return std::min(0.0, log_joint_proposed - log_joint_current + log_abs_jacobian);
}

/// Accept iff log u <= min(0, lp - lc + log|J|).
inline bool generalized_accept(double log_joint_current, double log_joint_proposed,
                               double log_abs_jacobian, double u) {
  if (std::isnan(u) || u < 0.0 || u > 1.0) throw ContractViolation("acceptance: u outside [0, 1]");
  const double log_alpha = log_acceptance_probability(log_joint_current, log_joint_proposed, log_abs_jacobian);
  if (log_alpha == kNegInf) return false;
  return std::log(u) <= log_alpha;
}

/// Read-only view of the previous generation of an ensemble.
struct EnsembleView {
  const std::vector<Vector>* snapshot = nullptr;
  std::size_t self = 0;

  std::size_t size() const { return snapshot ? snapshot->size() : 0; }
  const Vector& operator[](std::size_t i) const { return (*snapshot)[i]; }
};

template <class K>
concept TransitionKernel = requires(const K& k, ChainState& s, const TargetDensity& t, RngStream& r) {
  { k.step(s, t, r) } -> std::same_as<KernelStep>;
};

template <class K>
concept EnsembleKernel = TransitionKernel<K> &&
    requires(const K& k, ChainState& s, const TargetDensity& t, RngStream& r, const EnsembleView& v) {
      { k.step(s, t, r, v) } -> std::same_as<KernelStep>;
      { k.min_ensemble_size() } -> std::convertible_to<std::size_t>;
    };

template <class K>
std::size_t min_ensemble_size_of(const K& kernel) {
  if constexpr (EnsembleKernel<K>) return kernel.min_ensemble_size();
  return 1;
}

/// Type-erased kernel; immutable and cheap to copy (shared implementation).
class AnyKernel {
 public:
  AnyKernel() = default;

  template <TransitionKernel K>
    requires(!std::same_as<std::decay_t<K>, AnyKernel>)
  AnyKernel(K kernel) : impl_(std::make_shared<const Model<K>>(std::move(kernel))) {}

  explicit operator bool() const { return static_cast<bool>(impl_); }

  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng) const {
    return impl_->step(state, target, rng, nullptr);
  }
  KernelStep step(ChainState& state, const TargetDensity& target, RngStream& rng,
                  const EnsembleView& view) const {
    return impl_->step(state, target, rng, &view);
  }
  std::size_t min_ensemble_size() const { return impl_->min_ensemble_size(); }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual KernelStep step(ChainState&, const TargetDensity&, RngStream&, const EnsembleView*) const = 0;
    virtual std::size_t min_ensemble_size() const = 0;
  };

  template <class K>
  struct Model final : Concept {
    explicit Model(K k) : kernel(std::move(k)) {}
    KernelStep step(ChainState& s, const TargetDensity& t, RngStream& r, const EnsembleView* v) const override {
      if constexpr (EnsembleKernel<K>) {
        if (v != nullptr) return kernel.step(s, t, r, *v);
      }
      return kernel.step(s, t, r);
    }
    std::size_t min_ensemble_size() const override { return min_ensemble_size_of(kernel); }
    K kernel;
  };

  std::shared_ptr<const Concept> impl_;
};

namespace detail {

inline void record(ChainTrace& trace, Index row, const ChainState& state, const KernelStep& step) {
  trace.samples.row(row) = state.position.transpose();
  const auto r = static_cast<std::size_t>(row);
  trace.accepted[r] = step.accepted ? 1 : 0;
  trace.log_density[r] = state.log_density;
  trace.proposals_evaluated[r] = step.proposals_evaluated;
}

inline void check_step(const ChainState& state, const KernelStep& step, [[maybe_unused]] const TargetDensity& target) {
  if (step.proposals_evaluated < 1) throw ContractViolation("kernel reported zero proposals");
#ifndef NDEBUG
  const double fresh = target(state.position);
  const double tol = 1e-8 * std::max(1.0, std::abs(fresh));
  if (!(std::abs(fresh - state.log_density) <= tol))
    throw ContractViolation("kernel left a stale cached log density");
#endif
  (void)state;
}

inline ChainState initial_state(const TargetDensity& target, const Vector& initial) {
  if (initial.size() != target.dimension()) throw ConfigError("initial point has wrong dimension");
  const double lp = target(initial);
  if (lp == kNegInf) throw ContractViolation("initial point has zero target density");
  return {initial, lp};
}

}  // namespace detail

/// Advance an existing chain state M iterations; row k of the trace is the
/// state after the (k+1)-th kernel application.
template <TransitionKernel K>
ChainTrace run_chain(const K& kernel, const TargetDensity& target, ChainState& state, Index iterations,
                     RngStream& rng) {
  if (iterations < 1) throw ConfigError("run_chain: iterations must be >= 1");
  if (state.log_density == kNegInf) throw ContractViolation("run_chain: state has zero target density");
  ChainTrace trace(iterations, target.dimension());
  for (Index k = 0; k < iterations; ++k) {
    const KernelStep step = kernel.step(state, target, rng);
    ++state.iteration;
    detail::check_step(state, step, target);
    detail::record(trace, k, state, step);
  }
  return trace;
}

template <TransitionKernel K>
ChainTrace run_chain(const K& kernel, const TargetDensity& target, const Vector& initial, Index iterations,
                     RngStream& rng) {
  ChainState state = detail::initial_state(target, initial);
  return run_chain(kernel, target, state, iterations, rng);
}

/// Lockstep ensemble of chains. Chain i draws from rng.substream(i); in
/// generation g every chain sees the positions of generation g-1 only.
/// With threads > 1 the chains of one generation run concurrently and a
/// barrier separates generations.
template <TransitionKernel K>
std::vector<ChainTrace> run_ensemble(const K& kernel, const TargetDensity& target,
                                     const std::vector<Vector>& initials, Index iterations,
                                     const RngStream& rng, unsigned threads = 1) {
  const std::size_t chains = initials.size();
  if (chains == 0) throw ConfigError("run_ensemble: no chains");
  if (chains < min_ensemble_size_of(kernel))
    throw ConfigError("run_ensemble: kernel needs at least " + std::to_string(min_ensemble_size_of(kernel)) +
                      " chains");
  if (iterations < 1) throw ConfigError("run_ensemble: iterations must be >= 1");

  std::vector<ChainState> states;
  std::vector<RngStream> rngs;
  std::vector<ChainTrace> traces;
  std::vector<Vector> snapshot;
  for (std::size_t i = 0; i < chains; ++i) {
    states.push_back(detail::initial_state(target, initials[i]));
    rngs.push_back(rng.substream(i));
    traces.emplace_back(iterations, target.dimension());
    snapshot.push_back(initials[i]);
  }

  auto advance = [&](std::size_t i, Index g) {
    const EnsembleView view{&snapshot, i};
    KernelStep step;
    if constexpr (EnsembleKernel<K>) {
      step = kernel.step(states[i], target, rngs[i], view);
    } else {
      step = kernel.step(states[i], target, rngs[i]);
    }
    ++states[i].iteration;
    detail::check_step(states[i], step, target);
    detail::record(traces[i], g, states[i], step);
  };
  auto publish = [&]() noexcept {
    for (std::size_t i = 0; i < chains; ++i) snapshot[i] = states[i].position;
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, chains);
  if (workers == 1) {
    for (Index g = 0; g < iterations; ++g) {
      for (std::size_t i = 0; i < chains; ++i) advance(i, g);
      publish();
    }
    return traces;
  }

  std::mutex error_mutex;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::barrier sync(static_cast<std::ptrdiff_t>(workers), publish);
  auto work = [&](std::size_t w) {
    for (Index g = 0; g < iterations; ++g) {
      if (!failed.load()) {
        try {
          for (std::size_t i = w; i < chains; i += workers) advance(i, g);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
      sync.arrive_and_wait();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return traces;
}

}  // namespace gmh
