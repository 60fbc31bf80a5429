#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdat::pipeline {

// Bad command line, missing input file or unwritable output directory.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Stable across subcommands.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // a stage or computation failed at run time
  kExitUsage = 2,    // usage, configuration or input-format error
};

// Entry point of the sdat tool. `args` excludes the program name. Results go
// to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace sdat::pipeline
