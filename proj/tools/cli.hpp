#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cpdetect/time_series.hpp"

namespace cpdetect::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitDegenerate = 3;

/// Minimum series length accepted by `test`.
inline constexpr std::size_t kMinTestLength = 10;

/// Reads a single numeric column: comma-separated, optional header line,
/// blank lines ignored. Throws std::invalid_argument naming the 1-based line
/// of the first malformed row.
[[nodiscard]] std::vector<double> parse_series_csv(std::istream& in);

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace cpdetect::cli
