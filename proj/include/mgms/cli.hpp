#pragma once

#include <iosfwd>

namespace mgms::cli {

/// Runs one subcommand. Returns 0 on success, 1 on input/configuration
/// errors and 2 on numerical failures; diagnostics go to `err` as one line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mgms::cli
