// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FIRO_LOG_HPP
#define FIRO_LOG_HPP

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace firo::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Threshold comes from FIRO_LOG (error|warn|info|debug), default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("FIRO_LOG");
    const std::string_view v = env ? env : "";
    if (v == "error") return Level::kError;
    if (v == "info") return Level::kInfo;
    if (v == "debug") return Level::kDebug;
    return Level::kWarn;
  }();
  return level;
}

inline void write(Level level, std::string_view tag, std::string_view msg) {
  if (level <= threshold()) std::cerr << "[firo " << tag << "] " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::kError, "error", msg); }
inline void warn(std::string_view msg) { write(Level::kWarn, "warn", msg); }
inline void info(std::string_view msg) { write(Level::kInfo, "info", msg); }
inline void debug(std::string_view msg) { write(Level::kDebug, "debug", msg); }

}  // namespace firo::log

#endif  // FIRO_LOG_HPP
