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

#include <stdexcept>
#include <string>

namespace gmh {

/// A precondition or invariant of a kernel, map or target was broken.
/// NaN densities, a chain sitting at zero density and runaway shrink loops
/// all land here; they indicate a bug in the caller's model, not bad luck.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Invalid configuration of a kernel, ensemble or experiment.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine gave up (jitter escalation exhausted, particle cap hit).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace detail
}  // namespace gmh
