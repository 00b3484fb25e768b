#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dmidas {

/// Process exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitRuntime = 3 };

/// Runs one command line (args exclude the program name). Reports go to `out`,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmidas
