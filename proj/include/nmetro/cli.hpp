#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nmetro::cli {

/// Exit statuses: 0 success, 2 validation error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace nmetro::cli
