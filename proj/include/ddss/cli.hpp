#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ddss/error.hpp"

namespace ddss {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int infeasible = 2;
inline constexpr int input_error = 3;
inline constexpr int solver_error = 4;
}  // namespace exit_code

int exit_code_for(ErrorKind kind);

// One `ddss` invocation; args[0] is the program name. Reports go to `out`,
// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddss
