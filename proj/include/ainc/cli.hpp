#pragma once

#include <string>
#include <vector>

namespace ainc {

// Command-line front end. `args` excludes the program name.
// Exit codes: 0 success, 1 usage error, 2 domain error (bad config, bad
// files, failed checks, training abort).
int run_cli(const std::vector<std::string>& args);

}  // namespace ainc
