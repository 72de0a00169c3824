#pragma once

#include <iosfwd>

namespace mrcp {

// Entry point behind the `mrcp` binary. Subcommands: `simulate`, `predict`.
// Exit codes: 0 success, 1 partial numerical failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mrcp
