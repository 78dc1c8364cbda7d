#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfs::experiment {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// `args` excludes the program name, e.g. {"search", "--seed", "3"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lfs::experiment
