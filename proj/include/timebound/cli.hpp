#pragma once

#include <string>
#include <vector>

namespace timebound::cli {

// Exit codes: 0 success, 1 usage/IO errors, 2 analysis refusals.
int run(const std::vector<std::string>& args);

} // namespace timebound::cli
