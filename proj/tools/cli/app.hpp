#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lifshitz::cli {

/// Environment variable that overrides the output directory (below --out).
inline constexpr const char* kOutputEnv = "LIFSHITZ_LAB_OUT";
inline constexpr const char* kDefaultOutputDir = "lifshitz-out";

/// Entire command-line program; returns the process exit code. Split out of
/// main so tests can drive it in-process.
int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lifshitz::cli
