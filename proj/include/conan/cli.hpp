#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace conan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitSolver = 2;

/// Command-line entry point. args excludes the program name. Results go to
/// --out or `out`; diagnostics are one line on `err`. Returns 0 on success,
/// 1 on invalid input and 2 on solver failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace conan
