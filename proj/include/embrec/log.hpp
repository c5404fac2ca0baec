#pragma once

// Minimal leveled logging to standard error.

#include <string_view>

namespace embrec::log {

enum class Level { quiet = 0, warn = 1, info = 2 };

void set_level(Level level);
Level level();

void info(std::string_view message);
void warn(std::string_view message);

}  // namespace embrec::log
