#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fsnet::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
/// Full-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_integer(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char delimiter);
std::string_view trim(std::string_view s);

}  // namespace fsnet::text
