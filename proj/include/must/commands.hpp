#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace must {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitDegenerate = 3,
};

/// Entry point of the `must` tool. `args[0]` is the program name. Progress
/// goes to `log`; nothing is written to stdout except help text.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace must
