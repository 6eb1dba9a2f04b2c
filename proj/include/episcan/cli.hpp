#pragma once

namespace episcan {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitRetain = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitReject = 3,
};

/// Entry point for the `test`, `simulate` and `generate` subcommands.
int run_cli(int argc, char** argv);

}  // namespace episcan
