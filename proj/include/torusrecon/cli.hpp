#pragma once

#include <iosfwd>

namespace torusrecon {

/// Process exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Entry point of the `torusrecon` tool; returns the process exit code.
/// Diagnostics go to `err`, command results that are not written to files go to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace torusrecon
