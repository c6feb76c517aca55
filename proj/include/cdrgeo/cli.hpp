#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdrgeo {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,      // bad arguments, unreadable or unusable input
  kExitInvariant = 3,  // internal invariant violated
};

/// Runs the `cdrgeo` command line. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace cdrgeo
