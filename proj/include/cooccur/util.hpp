#pragma once

#include <cstdio>
#include <string>

namespace cooccur {

// Log levels follow COOCCUR_LOG={error,info,debug}; default info.
enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void set_log_level(LogLevel level);
void log_line(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_line(LogLevel::Error, msg); }
inline void log_info(const std::string& msg) { log_line(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::Debug, msg); }

// Deterministic decimal rendering for CSV output.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace cooccur
