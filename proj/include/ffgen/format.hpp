#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ffgen {

// Locale independent, round-trip exact decimal (17 significant digits).
std::string format_double(double value);
// Shorter form for human-facing tables.
std::string format_double(double value, int precision);

// Whole-string parse; nullopt on junk or trailing characters.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace ffgen
