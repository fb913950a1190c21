#pragma once

#include <iosfwd>

namespace replan {

// Exit codes of the replan executable.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitAdvisor = 3;

// Runs one subcommand. Output goes to `out`, diagnostics to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace replan
