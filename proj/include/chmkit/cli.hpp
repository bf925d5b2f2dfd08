#ifndef CHMKIT_CLI_HPP
#define CHMKIT_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace chmkit {

/// Runs one CLI invocation. args excludes the program name. Exit codes:
/// 0 success, 1 bad input or usage, 2 internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace chmkit

#endif
