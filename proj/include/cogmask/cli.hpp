#pragma once

#include <iosfwd>

namespace cogmask::cli {

/// Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 the dataset fails
/// the rationality test (`test` only), 4 solver non-convergence (`mask`/`sweep` with
/// --strict) or a numerical failure.
enum ExitCode : int { kOk = 0, kUsage = 1, kInput = 2, kTestFailed = 3, kSolver = 4 };

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace cogmask::cli
