#pragma once

namespace loggas {

// Dispatch a full command line (argv[0] ignored). Exit codes:
//   0 success, 2 validation error, 3 solver error,
//   4 statistical band failure under --assert, 1 anything else.
// Errors are also emitted as structured JSON on stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace loggas
