#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace gcmopt::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kIoError = 3,
  kSolverError = 4,
  kContractError = 5,
};

/// Maps gcmopt::Error kinds (and std::out_of_range, a contract breach) to exit codes.
int exit_code_for(const std::exception& e);

/// Relative paths are placed under $GCMOPT_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& path);

int cmd_build_gcm(const std::filesystem::path& config, const std::filesystem::path& out, std::ostream& log);
int cmd_run(const std::filesystem::path& experiment, std::ostream& log);
int cmd_plot_data(const std::filesystem::path& run_dir, std::ostream& log);
int cmd_validate_config(const std::filesystem::path& config, std::ostream& log);

/// Parses argv and dispatches to a subcommand.
int main(int argc, char** argv);

}  // namespace gcmopt::cli
