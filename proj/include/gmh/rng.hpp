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
#include <random>

namespace gmh {

namespace detail {

// SplitMix64 finalizer, used to decorrelate (seed, stream) pairs before
// they reach the Mersenne twister seeding.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic random stream identified by (seed, stream_id).
///
/// Each chain owns its stream exclusively. Two streams built from the same
/// pair and driven by the same call sequence produce bit-identical draws;
/// distinct stream ids give statistically independent substreams.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    const std::uint64_t a = detail::splitmix64(seed);
    const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(stream_id + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream; chain i of an ensemble uses substream(i).
  RngStream substream(std::uint64_t index) const {
    return RngStream(seed_, detail::splitmix64(stream_id_ * 0x9e3779b97f4a7c15ULL + index + 1));
  }

  /// Uniform on the open interval (0, 1), 53 bits.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() { return normal_(engine_); }

  /// Exp(1) draw, -log of an open-interval uniform.
  double exponential() { return -std::log(uniform()); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  engine_type& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gmh
