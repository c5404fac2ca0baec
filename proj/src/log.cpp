#include "embrec/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace embrec::log {
namespace {

std::atomic<Level> g_level{Level::warn};
std::mutex g_mu;

void emit(const char* tag, std::string_view message) {
  std::lock_guard lock(g_mu);
  std::cerr << '[' << tag << "] " << message << '\n';
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void info(std::string_view message) {
  if (g_level.load() >= Level::info) emit("info", message);
}

void warn(std::string_view message) {
  if (g_level.load() >= Level::warn) emit("warn", message);
}

}  // namespace embrec::log
