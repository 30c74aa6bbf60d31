#pragma once

#include <ostream>
#include <string_view>

namespace ffgen::cli {

inline constexpr std::string_view kVersion = "1.0.0";

// Full command-line entry point. Returns the process exit code:
// 0 success, 1 validation error, 2 runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ffgen::cli
