#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wlab/entropy.hpp"
#include "wlab/model.hpp"

namespace wlab {

// Thrown on malformed or inconsistent scenario files; the CLI maps it to
// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  DriftModel model = DriftModel::gauss_channel(1.0);
  std::string model_name = "gauss_channel";
  int n_steps = 1024;
  std::vector<double> lambda_grid;
  EngineSpec engine;
  int n_paths = 4096;
  std::uint64_t seed = 1;
  bool antithetic = true;
  int smoother_size = 0;
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_json = true;

  ScenarioContext context() const {
    ScenarioContext ctx{model, TimeGrid(n_steps), engine,
                        n_paths, seed,            antithetic};
    ctx.smoother_size = smoother_size;
    return ctx;
  }
};

// Parses and validates the JSON scenario; unknown keys anywhere are
// rejected.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

struct ReportRow {
  std::string quantity;
  std::optional<double> lambda;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::optional<double> oracle;
  std::optional<double> rel_err;
  std::optional<bool> pass;
};

class ReportTable {
 public:
  // Ungated diagnostic row.
  void add(const std::string& quantity, std::optional<double> lambda,
           double estimate, double stderr_ = 0.0);
  // Oracle row gated by |estimate - oracle| <= max(3 se, rel_tol |oracle|,
  // abs_tol).
  void add_checked(const std::string& quantity, std::optional<double> lambda,
                   double estimate, double stderr_, double oracle,
                   double rel_tol, double abs_tol = 0.0, double se_mult = 3.0);
  // Predicate row with an explicit verdict.
  void add_predicate(const std::string& quantity, std::optional<double> lambda,
                     double estimate, bool pass,
                     std::optional<double> oracle = std::nullopt,
                     double stderr_ = 0.0);

  const std::vector<ReportRow>& rows() const { return rows_; }
  bool all_passed() const;
  int failures() const;

  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;

 private:
  std::vector<ReportRow> rows_;
};

// rel_err convention: |estimate - oracle| / |oracle| when the oracle is
// nonzero, plain |estimate - oracle| otherwise.
double report_rel_err(double estimate, double oracle);

}  // namespace wlab
