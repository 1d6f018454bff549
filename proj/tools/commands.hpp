#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dtlog::cli {

// Runs one dtlog command line (without the program name). Returns the exit
// status: 0 success, 1 domain error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Shortest round-trip decimal, with ".0" appended to integral values.
std::string format_score(double value);

}  // namespace dtlog::cli
