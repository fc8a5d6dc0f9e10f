#pragma once

#include <string>
#include <vector>

namespace scdf {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitIntegrity = 2,
  kExitEndpoint = 3,
};

// Entry point for the `scdf` command line. `args` excludes the program name.
// Subcommands: build-dataset, forecast, evaluate, train-toy, judge, synth.
int run_cli(const std::vector<std::string>& args);

}  // namespace scdf
