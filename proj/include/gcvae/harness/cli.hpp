#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcvae {

/// Entry point of the gcvae command-line tool. `args` excludes the program
/// name. Returns the process exit code: 0 success, 1 internal error, 2 bad
/// input or configuration.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gcvae
