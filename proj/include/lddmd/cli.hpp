#pragma once

#include <ostream>

namespace lddmd {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitInput = 2,      // bad config, unreadable or mismatched input
    kExitNumerical = 3,  // training stopped on a non-finite value
};

/// Entry point of the `lddmd` tool: generate, train, eval, inspect.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lddmd
