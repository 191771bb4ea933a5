#pragma once

#include <iosfwd>

namespace protoscore::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kRuntimeError = 2;
inline constexpr int kAdapterError = 3;

// Parses argv and runs one subcommand. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace protoscore::cli
