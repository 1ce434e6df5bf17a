#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace anmf {

/// Command-line entry point. Subcommands: train, separate, denoise, tune,
/// eval, mix, features. Results go to `out` as CSV or JSON, diagnostics to
/// `err`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with args[0] as the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anmf
