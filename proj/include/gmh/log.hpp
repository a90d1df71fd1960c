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

#include <atomic>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

// Minimal leveled logging. The threshold comes from GMH_LOG={error,info,debug}
// (default: error). Tests may install a sink to observe messages.
namespace gmh::log {

enum class Level { error = 0, warning = 1, info = 2, debug = 3 };

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {

inline Level level_from_env() {
  const char* env = std::getenv("GMH_LOG");
  if (env == nullptr) return Level::error;
  const std::string_view v(env);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  return Level::error;
}

struct Registry {
  std::mutex mutex;
  Sink sink;
  Level threshold = level_from_env();
};

inline Registry& registry() {
  static Registry r;
  return r;
}

inline const char* tag(Level level) {
  switch (level) {
    case Level::error: return "error";
    case Level::warning: return "warning";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

}  // namespace detail

/// Replace the sink; an empty sink restores stderr output.
inline void set_sink(Sink sink) {
  auto& r = detail::registry();
  std::lock_guard lock(r.mutex);
  r.sink = std::move(sink);
}

inline void set_threshold(Level level) {
  auto& r = detail::registry();
  std::lock_guard lock(r.mutex);
  r.threshold = level;
}

inline void write(Level level, std::string_view message) {
  auto& r = detail::registry();
  std::lock_guard lock(r.mutex);
  if (r.sink) {
    r.sink(level, message);
    return;
  }
  // warnings always reach stderr; they flag questionable configuration
  if (level == Level::warning || static_cast<int>(level) <= static_cast<int>(r.threshold))
    std::clog << "[gmh " << detail::tag(level) << "] " << message << '\n';
}

inline void warning(std::string_view message) { write(Level::warning, message); }
inline void info(std::string_view message) { write(Level::info, message); }
inline void debug(std::string_view message) { write(Level::debug, message); }

}  // namespace gmh::log
