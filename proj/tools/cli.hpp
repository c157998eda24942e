#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdgs::cli {

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitInternal = 4;

/// Runs the command line `args` (without the program name). Reports go to
/// `out`; diagnostics and the single `error[<code>]: ...` line go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sdgs::cli
