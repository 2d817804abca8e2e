#pragma once

#include <string>
#include <vector>

namespace rirs {

/// Full command-line front end. Returns the process exit code:
/// 0 success, 1 property violation or evaluation failure, 2 usage error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace rirs
