#pragma once

// Helpers for the delimiter-separated manifests and config files.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace embrec::text {

std::string_view trim(std::string_view s);

// Splits on tabs when the line has any, otherwise on commas. Fields are trimmed.
std::vector<std::string> split_fields(std::string_view line);

// Splits on runs of whitespace.
std::vector<std::string> split_whitespace(std::string_view line);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Non-empty lines that do not start with '#'.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace embrec::text
