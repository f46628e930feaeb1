#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ttriple::cli {

// Exit codes.
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;  // also runtime failures such as a Newton breakdown
inline constexpr int parse_error = 2;
inline constexpr int inconsistent_initial_data = 3;
inline constexpr int shape_mismatch = 4;

inline constexpr int report_schema_version = 1;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ttriple::cli
