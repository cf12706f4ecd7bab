#include <CLI11.hpp>

#include <iostream>

#include "chainbound/errors.hpp"
#include "cli/config.hpp"
#include "cli/run.hpp"

using namespace chainbound;

int main(int argc, char** argv) {
  CLI::App app{"chainbound: chaining nets, generalized Hölder seminorms and stochastic sup bounds"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned workers = 0;
  app.add_option("--config", config_path, "experiment config (TOML or JSON)")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--workers", workers, "worker threads (0 = all cores)");
  app.add_option("--out", out, "output directory (overrides the config)");
  app.set_version_flag("--version", CHAINBOUND_VERSION);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  cli::RunOptions options;
  options.seed = seed;
  if (out) options.out = *out;
  options.workers = Workers{workers};
  try {
    const cli::ExperimentConfig config = cli::load_config(config_path);
    return cli::run_and_report(config, options, std::cout, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cli::kExitUsage;
  }
}
