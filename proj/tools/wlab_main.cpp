// Scenario runner for the Wiener-shift laboratory.
//
//   wlab <simulate|verify|sweep|report> --config scenario.json
//        [--seed N] [--threads N] [--out DIR]
//
// Exit codes: 0 ok, 1 check failure, 2 config error, 3 numerical collapse.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "wlab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"wlab - numerical laboratory for adapted shifts of Wiener paths"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = 0;

  for (const char* name : {"simulate", "verify", "sweep", "report"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario JSON file")->required();
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--threads", threads, "worker threads (0 = hardware)");
    sub->add_option("--out", out_dir, "override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wlab::kExitConfigError;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  wlab::RunOptions options;
  options.subcommand = app.get_subcommands().front()->get_name();
  options.config_path = config_path;
  options.seed_override = seed;
  options.out_override = out_dir;

  try {
    return wlab::run_scenario(options);
  } catch (const wlab::ConfigError& e) {
    std::fprintf(stderr, "wlab: config error: %s\n", e.what());
    return wlab::kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wlab: error: %s\n", e.what());
    return wlab::kExitNumericalCollapse;
  }
}
