#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace osteo::cli {

/// Runs one command line (without the program name). Machine output goes to
/// `out`, diagnostics to `err`. Returns 0 on success, 1 on a domain or I/O
/// error and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace osteo::cli
