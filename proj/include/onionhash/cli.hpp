#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace onionhash {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRejected = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `onionhash` command. Passwords come from `in`, never
// from the argument list. The pepper is read from ONIONHASH_PEPPER.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace onionhash
