#pragma once

#include <iosfwd>

namespace mdcompat {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point of the command-line tool. Returns 0 on success, 1 on a hard
/// error and 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mdcompat
