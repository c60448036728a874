#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace lodada {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

inline LogLevel log_level_from_env() {
    const char* v = std::getenv("LODADA_LOG_LEVEL");
    if (!v) return LogLevel::Info;
    std::string s = v;
    if (s == "error") return LogLevel::Error;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

inline LogLevel& log_level() {
    static LogLevel level = log_level_from_env();
    return level;
}

inline void log_error(const std::string& msg) { std::fprintf(stderr, "[error] %s\n", msg.c_str()); }

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

}  // namespace lodada
