#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rse {

// Runs one command line (args[0] is the program name). Returns the process
// exit status; diagnostics go to `err` as a single line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rse
