#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mg::cli {

// Runs one `mg` invocation. args[0] is the program name. Returns the exit
// status: 0 success, 1 validation error, 2 runtime or bridge error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mg::cli
