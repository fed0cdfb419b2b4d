#include "pharmatimeline/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace pharmatimeline {

namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::Warn)};

const char* level_tag(LogLevel level) {
  switch (level) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "?";
}

}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void init_log_from_env() {
  const char* env = std::getenv("PHARMATIMELINE_LOG");
  if (!env) return;
  if (std::strcmp(env, "error") == 0) set_log_level(LogLevel::Error);
  else if (std::strcmp(env, "warn") == 0) set_log_level(LogLevel::Warn);
  else if (std::strcmp(env, "info") == 0) set_log_level(LogLevel::Info);
  else if (std::strcmp(env, "debug") == 0) set_log_level(LogLevel::Debug);
  else std::fprintf(stderr, "[warn] unknown PHARMATIMELINE_LOG level '%s'\n", env);
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > g_level.load()) return;
  std::fprintf(stderr, "[%s] %s\n", level_tag(level), message.c_str());
}

}  // namespace pharmatimeline
