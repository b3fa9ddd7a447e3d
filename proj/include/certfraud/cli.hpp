#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace certfraud::cli {

inline constexpr std::uint64_t kDefaultSeed = 20091;

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on usage errors, 2 on I/O errors, 3 on data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace certfraud::cli
