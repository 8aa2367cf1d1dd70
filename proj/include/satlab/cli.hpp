#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace satlab {

// Exit codes: 0 success, 1 invalid input or I/O, 2 hypothesis violation,
// 3 no solution / nonconvergence / insufficient data, 4 a verification
// suite reported failures.
inline constexpr int kExitVerifyFailed = 4;

/// Entry point for `satlab <subcommand> --config <path> [--out dir]
/// [--seed n] [--jobs n] [--quiet]`. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace satlab
