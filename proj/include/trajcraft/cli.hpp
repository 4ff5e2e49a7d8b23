#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trajcraft {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Entry point of the `trajcraft` tool. `args` excludes the program name.
/// Exit codes: 0 success, 1 bad arguments or contract violations, 2 I/O or format errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trajcraft
