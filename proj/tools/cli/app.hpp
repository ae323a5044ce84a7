#pragma once

#include <iosfwd>

namespace canopyforge::cli {

/// Parses argv, runs the chosen subcommand and maps failures to exit codes:
/// 0 ok, 1 gradient check failed, 2 input error, 3 numeric/precondition error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace canopyforge::cli
