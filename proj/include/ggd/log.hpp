// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace ggd {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// Level from the GGD_LOG environment variable: quiet, info (default),
/// or debug. Read once per process.
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("GGD_LOG");
        if (!env) return LogLevel::Info;
        const std::string v(env);
        if (v == "quiet") return LogLevel::Quiet;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[ggd] " << msg << '\n';
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "[ggd:debug] " << msg << '\n';
}

} // namespace ggd
