#pragma once

// Command-line front end: generate | validate | solve | sweep.
// Exit codes: 0 ok, 2 bad flags, 3 bad/infeasible scenario, 4 run ended
// with an infeasible subproblem.

#include <string>
#include <vector>

namespace sagin {

int cli_run(const std::vector<std::string>& args);

}  // namespace sagin
