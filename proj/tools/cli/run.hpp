#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chainbound/parallel.hpp"
#include "cli/config.hpp"

namespace chainbound::cli {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2, kExitContract = 3 };

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  Workers workers;
};

struct Contract {
  std::string name;
  bool passed = true;
  std::string table;     // output file the row refers to, if any
  std::int64_t row = -1;  // 1-based data row in `table`
  std::string detail;
};

struct RunResult {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::filesystem::path out_dir;
  std::vector<std::string> outputs;
  std::vector<Contract> contracts;
  double wall_seconds = 0.0;

  bool passed() const noexcept;
  const Contract* first_failure() const noexcept;
};

// Validates params, runs the command and only then writes every output, contracts.csv and
// manifest.json into the output directory. Throws UsageError (nothing written) for schema
// violations and library ParameterErrors.
RunResult run(ExperimentConfig config, const RunOptions& options);

// Maps run() onto an exit code and prints a one-line report (or the failing contract) to
// the given streams.
int run_and_report(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace chainbound::cli
