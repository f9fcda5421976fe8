#include "cooccur/util.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace cooccur {

namespace {

LogLevel initial_level() {
  const char* env = std::getenv("COOCCUR_LOG");
  if (!env) return LogLevel::Info;
  if (std::strcmp(env, "error") == 0) return LogLevel::Error;
  if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
  return LogLevel::Info;
}

std::atomic<int> g_level{static_cast<int>(initial_level())};

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

void log_line(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > g_level.load()) return;
  const char* tag = level == LogLevel::Error
                        ? "error"
                        : (level == LogLevel::Debug ? "debug" : "info");
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

}  // namespace cooccur
