#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace graspd::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Level comes from GRASPD_LOG (error|warn|info|debug), default warn.
inline Level threshold() {
  static Level lvl = [] {
    const char* env = std::getenv("GRASPD_LOG");
    if (!env) return Level::kWarn;
    if (std::strcmp(env, "error") == 0) return Level::kError;
    if (std::strcmp(env, "info") == 0) return Level::kInfo;
    if (std::strcmp(env, "debug") == 0) return Level::kDebug;
    return Level::kWarn;
  }();
  return lvl;
}

template <class... Args>
void emit(Level lvl, const char* tag, const char* fmt, Args... args) {
  if (lvl > threshold()) return;
  std::fprintf(stderr, "[graspd %s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

template <class... Args>
void error(const char* fmt, Args... args) { emit(Level::kError, "error", fmt, args...); }
template <class... Args>
void warn(const char* fmt, Args... args) { emit(Level::kWarn, "warn", fmt, args...); }
template <class... Args>
void info(const char* fmt, Args... args) { emit(Level::kInfo, "info", fmt, args...); }
template <class... Args>
void debug(const char* fmt, Args... args) { emit(Level::kDebug, "debug", fmt, args...); }

}  // namespace graspd::log
