#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pedcloud::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Data goes to `out`
/// unless an output path is given; diagnostics always go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pedcloud::cli
