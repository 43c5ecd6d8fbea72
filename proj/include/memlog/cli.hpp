#pragma once

#include "memlog/error.hpp"

namespace memlog {

// Process exit codes; stable, and listed in the README.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitSingleClass = 3,
  kExitLogParse = 4,
  kExitModelLoad = 5,
  kExitIo = 6,
  kExitBind = 7,
  kExitWatchDir = 8,
  kExitData = 9,
};

int exit_code_for(ErrorCode code);

// Entry point of the `memlog` tool. JSON results go to stdout, diagnostics to stderr.
int run_cli(int argc, char** argv);

}  // namespace memlog
