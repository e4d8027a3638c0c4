#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdmae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `sdmae` invocation. `args` excludes the program name.
/// Usage errors return 2, runtime failures 1 with a one-line diagnostic on `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(const std::vector<std::string>& args);

}  // namespace sdmae::cli
