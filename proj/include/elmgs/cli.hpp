// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "elmgs/error.hpp"

namespace elmgs::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kIo = 2,
    kData = 3,
    kNumerical = 4,
};

int exit_code_for(ErrorKind kind);

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace elmgs::cli
