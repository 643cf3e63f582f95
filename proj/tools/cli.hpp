#ifndef ADP_CLI_HPP
#define ADP_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace adp::cli {

enum ExitCode : int { Ok = 0, Usage = 1, Runtime = 2 };

// argv[0] is the program name. Output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adp::cli

#endif  // ADP_CLI_HPP
