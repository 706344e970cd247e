#pragma once

#include <iosfwd>

namespace kamsort::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kNumericalError = 2;

/// Entry point of the `kamsort` tool. Writes human output to `out`, warnings
/// and errors to `err`, and returns one of the exit codes above.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kamsort::cli
