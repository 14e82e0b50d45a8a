#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace twistlab::cli {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

/// Runs one invocation: args excludes the program name. Reports go to files
/// under --out; the short summary goes to `out`, error JSON to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

std::string version();

}  // namespace twistlab::cli
