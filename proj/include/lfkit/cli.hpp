#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lfkit/core.hpp"

namespace lfkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitInfeasible = 2;

// 2 for infeasible splits, 1 for everything else.
int exit_code_for(ErrorKind kind);

// args excludes the program name. Errors go to err as one JSON object per line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace lfkit
