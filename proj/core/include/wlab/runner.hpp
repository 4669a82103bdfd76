#pragma once

#include <optional>
#include <string>

#include "wlab/scenario.hpp"

namespace wlab {

// Exit codes shared by the CLI and the runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalCollapse = 3;

struct RunOptions {
  std::string subcommand;  // simulate | verify | sweep | report
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
};

// Executes one subcommand; returns the process exit code.  Configuration
// problems raise ConfigError before any output is written.
int run_scenario(const RunOptions& options);

// Individual runners, exposed for tests.
int run_simulate(const ScenarioConfig& cfg);
int run_verify(const ScenarioConfig& cfg);
int run_sweep(const ScenarioConfig& cfg);
int run_report(const std::string& out_dir, bool write_csv, bool write_json);

}  // namespace wlab
