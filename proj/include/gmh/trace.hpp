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

#include <cstdint>
#include <vector>

#include "gmh/error.hpp"
#include "gmh/linalg.hpp"

namespace gmh {

/// Sample matrix (one row per iteration) plus per-iteration metadata.
struct ChainTrace {
  Matrix samples;
  std::vector<std::uint8_t> accepted;
  std::vector<double> log_density;
  std::vector<std::int64_t> proposals_evaluated;

  ChainTrace() = default;
  ChainTrace(Index rows, Index dimension)
      : samples(rows, dimension),
        accepted(static_cast<std::size_t>(rows), 0),
        log_density(static_cast<std::size_t>(rows), 0.0),
        proposals_evaluated(static_cast<std::size_t>(rows), 0) {}

  Index size() const { return samples.rows(); }
  Index dimension() const { return samples.cols(); }

  Vector column(Index j) const { return samples.col(j); }

  double acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    double n = 0.0;
    for (auto a : accepted) n += a;
    return n / static_cast<double>(accepted.size());
  }

  double mean_proposals() const {
    if (proposals_evaluated.empty()) return 0.0;
    double n = 0.0;
    for (auto p : proposals_evaluated) n += static_cast<double>(p);
    return n / static_cast<double>(proposals_evaluated.size());
  }

  /// Rows [first, size()) as a new trace; used to drop burn-in.
  ChainTrace tail(Index first) const {
    if (first < 0 || first > size()) throw ConfigError("ChainTrace::tail: offset out of range");
    ChainTrace out(size() - first, dimension());
    out.samples = samples.bottomRows(size() - first);
    for (Index i = first; i < size(); ++i) {
      const auto d = static_cast<std::size_t>(i - first), s = static_cast<std::size_t>(i);
      out.accepted[d] = accepted[s];
      out.log_density[d] = log_density[s];
      out.proposals_evaluated[d] = proposals_evaluated[s];
    }
    return out;
  }

  /// Throws ContractViolation on NaN samples or inconsistent metadata lengths.
  void validate() const {
    const auto rows = static_cast<std::size_t>(size());
    if (accepted.size() != rows || log_density.size() != rows || proposals_evaluated.size() != rows)
      throw ContractViolation("ChainTrace: metadata length differs from sample rows");
    if (samples.hasNaN()) throw ContractViolation("ChainTrace: NaN in samples");
    for (double v : log_density)
      if (std::isnan(v)) throw ContractViolation("ChainTrace: NaN log density");
  }
};

}  // namespace gmh
