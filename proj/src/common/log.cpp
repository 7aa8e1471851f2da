// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace agb::log {
namespace {
std::atomic<Level> g_level{Level::warn};
std::mutex g_mutex;

const char* tag(Level level) {
  switch (level) {
    case Level::debug:
      return "debug";
    case Level::info:
      return "info";
    case Level::warn:
      return "warn";
    case Level::error:
      return "error";
    case Level::off:
      break;
  }
  return "";
}
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void write(Level lvl, const std::string& message) {
  if (lvl < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "[%s] %s\n", tag(lvl), message.c_str());
}

}  // namespace agb::log
