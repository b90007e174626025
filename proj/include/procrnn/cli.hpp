#pragma once

#include <string>
#include <vector>

namespace procrnn {

/// Entry point of the command-line tool. Parses argv, dispatches to the
/// subcommands (train, crossval, predict, hallucinate, remainder, stats)
/// and maps failures to exit codes: 0 success, 1 internal error, 2 usage or
/// I/O error. Exposed as a library function so tests can drive the full
/// tool in-process.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace procrnn
