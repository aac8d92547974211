#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tightfeed::cli {

enum ExitCode { kOk = 0, kNotConvergent = 1, kBadArguments = 2, kSolverFailure = 3 };

// args excludes the program name
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace tightfeed::cli
