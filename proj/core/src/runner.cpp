#include "wlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "wlab/constants.hpp"
#include "wlab/girsanov.hpp"
#include "wlab/inversion.hpp"
#include "wlab/malliavin.hpp"
#include "wlab/oracles.hpp"

namespace wlab {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void log_timing(const std::string& what, const Timer& timer) {
  // Timings go to stderr only; report files must be bit-identical across
  // runs and thread counts.
  std::fprintf(stderr, "[wlab] %-28s %8.2fs\n", what.c_str(), timer.seconds());
}

void write_table(const ScenarioConfig& cfg, const ReportTable& table,
                 const std::string& stem) {
  fs::create_directories(cfg.out_dir);
  if (cfg.write_csv) table.write_csv(cfg.out_dir + "/" + stem + ".csv");
  if (cfg.write_json) table.write_json(cfg.out_dir + "/" + stem + ".json");
}

std::optional<double> oracle_for(const ScenarioConfig& cfg,
                                 const std::string& quantity, double lambda) {
  return oracle::lookup(cfg.model, TimeGrid(cfg.n_steps), quantity, lambda);
}

void add_estimate_row(ReportTable& table, const ScenarioConfig& cfg,
                      const std::string& quantity, double lambda,
                      const MeanSe& value, double rel_tol) {
  const auto oracle_value = oracle_for(cfg, quantity, lambda);
  if (oracle_value)
    table.add_checked(quantity, lambda, value.mean, value.se, *oracle_value,
                      rel_tol);
  else
    table.add(quantity, lambda, value.mean, value.se);
}

// Second-moment finiteness of the empirical E[rho] / E[L] checks: the
// gaussian channel loses L^2 integrability once the snr grows, and the
// 3-SE gate is only meaningful on the finite-variance range.
bool rho_check_sound(const DriftModel& model, double lambda) {
  if (model.novikov_guaranteed()) return true;
  if (model.kind() == DriftKind::kGaussChannel &&
      model.prior().kind == ParameterLaw::Kind::kGaussian)
    return oracle::channel_snr(model, lambda) < 0.5;
  return false;
}

bool density_check_sound(const DriftModel& model, double lambda) {
  if (model.kind() == DriftKind::kGaussChannel &&
      model.prior().kind == ParameterLaw::Kind::kGaussian)
    return oracle::channel_snr(model, lambda) < 0.9;
  return model.novikov_guaranteed();
}

double mid_lambda(const std::vector<double>& grid) {
  return grid[grid.size() / 2];
}

// --- verify building blocks ---------------------------------------------

void verify_entropy_identity(const ScenarioConfig& cfg, ReportTable& table) {
  const auto ctx = cfg.context();
  for (double lambda : cfg.lambda_grid) {
    const auto report = entropy(ctx, lambda);
    add_estimate_row(table, cfg, "theta_direct", lambda, report.theta_direct,
                     0.03);
    add_estimate_row(table, cfg, "theta_rho", lambda, report.theta_rho, 0.03);
    table.add_predicate(
        "entropy_identity_gap", lambda, report.diff_mean,
        std::fabs(report.diff_mean) <= 3.0 * report.diff_se + 1e-12, 0.0,
        report.diff_se);
  }
}

void verify_normalizations(const ScenarioConfig& cfg, ReportTable& table) {
  const auto ctx = cfg.context();
  for (double lambda : cfg.lambda_grid) {
    const auto batch = simulate_paths(ctx, lambda, PathOptions{});
    std::vector<double> rho_vals(batch.records.size());
    std::vector<double> density_vals;
    density_vals.reserve(batch.records.size());
    const TimeGrid grid(cfg.n_steps);
    for (std::size_t i = 0; i < batch.records.size(); ++i)
      rho_vals[i] = std::exp(batch.records[i].log_rho);
    const auto rho_stat = jackknife_mean_se(rho_vals);
    if (rho_check_sound(cfg.model, lambda))
      table.add_checked("rho_normalization", lambda, rho_stat.mean,
                        rho_stat.se, 1.0, 0.0);
    else
      table.add("rho_normalization", lambda, rho_stat.mean, rho_stat.se);

    // E[L(w)] over fresh base paths; only when a closed form exists.
    bool have_closed = true;
    for (int p = 0; p < std::min<int>(cfg.n_paths, 2048) && have_closed; ++p) {
      RngStream rng_w(cfg.seed ^ 0x5eedf00dULL,
                      path_stream_id(p, StreamPurpose::kWiener));
      const auto w = sample_wiener(grid, rng_w);
      const auto log_l =
          closed_form_log_density(cfg.model, lambda, grid, w.values());
      if (!log_l) {
        have_closed = false;
        break;
      }
      density_vals.push_back(std::exp(*log_l));
    }
    if (have_closed && !density_vals.empty()) {
      const auto stat = jackknife_mean_se(density_vals);
      if (density_check_sound(cfg.model, lambda))
        table.add_checked("density_normalization", lambda, stat.mean, stat.se,
                          1.0, 0.0);
      else
        table.add("density_normalization", lambda, stat.mean, stat.se);
    }
  }
}

void verify_conjugate_identity(const ScenarioConfig& cfg, ReportTable& table) {
  const TimeGrid grid(cfg.n_steps);
  for (double lambda : cfg.lambda_grid) {
    const auto stats = conjugate_identity_check(
        cfg.model, lambda, grid, std::min(cfg.n_paths, 4096), cfg.engine,
        cfg.seed);
    table.add_predicate("conjugate_identity_mean_residual", lambda,
                        stats.mean_abs_residual,
                        stats.mean_abs_residual <= 2e-2, 0.0);
  }
}

void verify_malliavin(const ScenarioConfig& cfg, ReportTable& table) {
  const int n = std::min(cfg.n_steps, 256);
  const TimeGrid grid(n);
  const double lambda = mid_lambda(cfg.lambda_grid);
  const int n_paths = 12;
  double worst_gap = 0.0, worst_defect = 0.0;
  int carleman_ok = 0;
  for (int p = 0; p < n_paths; ++p) {
    RngStream rng_w(cfg.seed, path_stream_id(p, StreamPurpose::kWiener));
    RngStream rng_m(cfg.seed, path_stream_id(p, StreamPurpose::kParameter));
    const auto w = sample_wiener(grid, rng_w);
    const double m = cfg.model.sample_parameter(rng_m);
    const auto realized = build_u(cfg.model, lambda, w, m);
    const auto jac = gradient_matrix(cfg.model, lambda, w, m);
    const double div = divergence(realized.u.density(), jac, w);
    const double ito = ito_integral(realized.u.density(), w);
    worst_gap = std::max(worst_gap, std::fabs(div - ito));
    worst_defect = std::max(worst_defect, jac.quasi_nilpotency_defect());
    if (carleman_check(jac).satisfied) ++carleman_ok;
  }
  table.add_predicate("divergence_ito_gap", lambda, worst_gap,
                      worst_gap <= 1e-8, 0.0);
  table.add_predicate("quasi_nilpotency_defect", lambda, worst_defect,
                      worst_defect <= 1e-8, 0.0);
  table.add_predicate("carleman_fraction", lambda,
                      static_cast<double>(carleman_ok) / n_paths,
                      carleman_ok == n_paths, 1.0);
}

void verify_innovations(const ScenarioConfig& cfg, ReportTable& table) {
  const TimeGrid grid(cfg.n_steps);
  const auto ctx = cfg.context();
  const int n_paths = 200;
  for (double lambda : cfg.lambda_grid) {
    std::vector<double> increments;
    increments.reserve(static_cast<std::size_t>(n_paths) * cfg.n_steps);
    double lag_acc = 0.0;
    for (int p = 0; p < n_paths; ++p) {
      RngStream rng_w(cfg.seed, path_stream_id(p, StreamPurpose::kWiener));
      RngStream rng_m(cfg.seed, path_stream_id(p, StreamPurpose::kParameter));
      RngStream rng_f(cfg.seed, path_stream_id(p, StreamPurpose::kParticles));
      const auto w = sample_wiener(grid, rng_w);
      const double m = cfg.model.sample_parameter(rng_m);
      const auto realized = build_u(cfg.model, lambda, w, m);
      const auto filter = filter_with_engine(cfg.model, lambda, grid,
                                             realized.obs_values, ctx.engine,
                                             rng_f);
      const auto z = innovation(grid, realized.obs_values, filter);
      increments.insert(increments.end(), z.increments.begin(),
                        z.increments.end());
      lag_acc += lag1_autocorrelation(z.increments);
    }
    const double var_ratio = sample_variance(increments) / grid.dt;
    const double lag1 = lag_acc / n_paths;
    table.add_predicate("innovation_variance_ratio", lambda, var_ratio,
                        std::fabs(var_ratio - 1.0) <= 0.05, 1.0);
    table.add_predicate("innovation_lag1_autocorr", lambda, lag1,
                        std::fabs(lag1) <= 0.05, 0.0);
  }
}

void verify_theorem3(const ScenarioConfig& cfg, ReportTable& table) {
  const TimeGrid grid(cfg.n_steps);
  const double lambda_max =
      std::max(1.0, cfg.lambda_grid.back());
  const int steps =
      static_cast<int>(std::round(lambda_max / constants::kLambdaIntegrationStep));
  std::vector<double> alphas(steps + 1);
  for (int i = 0; i <= steps; ++i)
    alphas[i] = lambda_max * i / steps;

  double tol = 0.0;
  switch (cfg.model.kind()) {
    case DriftKind::kDeterministic: tol = 1e-3; break;
    case DriftKind::kGaussChannel: tol = 1e-2; break;
    case DriftKind::kMarkov: tol = 5e-2; break;
    case DriftKind::kPathFunctional: return;  // no conditional law
  }
  if (cfg.model.kind() == DriftKind::kGaussChannel &&
      cfg.model.prior().kind != ParameterLaw::Kind::kGaussian)
    return;  // no closed form to compare against

  const EngineSpec engine{EngineType::kQuadrature,
                          std::max(cfg.engine.size, 256)};
  const int n_paths = 16;
  double worst = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    RngStream rng_w(cfg.seed, path_stream_id(p, StreamPurpose::kWiener));
    const auto w = sample_wiener(grid, rng_w);
    RngStream rng_e(cfg.seed, path_stream_id(p, StreamPurpose::kResample));
    const auto estimates = density_along_lambda(cfg.model, alphas, w,
                                                std::nullopt, engine, rng_e);
    for (const auto& est : estimates) {
      const auto closed =
          closed_form_log_density(cfg.model, est.lambda, grid, w.values());
      if (!closed) return;
      worst = std::max(worst, std::fabs(std::expm1(est.log_value - *closed)));
    }
  }
  table.add_predicate("theorem3_max_rel_err", lambda_max, worst, worst <= tol,
                      0.0);
}

void verify_roundtrip(const ScenarioConfig& cfg, ReportTable& table) {
  if (!cfg.model.observation_form()) return;
  const TimeGrid grid(cfg.n_steps);
  const double lambda = cfg.lambda_grid.back();
  double worst = 0.0;
  bool all_converged = true;
  for (int p = 0; p < 8; ++p) {
    RngStream rng_w(cfg.seed, path_stream_id(p, StreamPurpose::kWiener));
    RngStream rng_m(cfg.seed, path_stream_id(p, StreamPurpose::kParameter));
    const auto w = sample_wiener(grid, rng_w);
    const double m = cfg.model.sample_parameter(rng_m);
    const auto report = invert_shift(cfg.model, lambda, w, m);
    all_converged = all_converged && report.converged;
    worst = std::max({worst, report.sup_u_of_v, report.sup_v_of_u});
  }
  table.add_predicate("roundtrip_sup", lambda, worst,
                      all_converged && worst <= 1e-10, 0.0);
}

void verify_derivatives(const ScenarioConfig& cfg, ReportTable& table) {
  // Formula-vs-finite-difference checks make sense where the second-order
  // field assembles analytically (state-free Jacobians).
  if (!cfg.model.jacobian_state_free()) return;
  const auto ctx = cfg.context();
  const double lambda = mid_lambda(cfg.lambda_grid);
  if (lambda <= 0.0) return;

  const auto d1 = entropy_derivative(ctx, lambda);
  {
    const auto oracle_value = oracle_for(cfg, "dtheta_dlambda", lambda);
    if (oracle_value)
      table.add_checked("dtheta_dlambda_formula", lambda, d1.formula.mean,
                        d1.formula.se, *oracle_value, 0.05);
    else
      table.add("dtheta_dlambda_formula", lambda, d1.formula.mean,
                d1.formula.se);
    table.add_predicate("dtheta_dlambda_fd_gap", lambda, d1.rel_gap,
                        std::fabs(d1.formula.mean - d1.finite_difference) <=
                            std::max(0.05 * std::fabs(d1.finite_difference),
                                     3.0 * (d1.formula.se + d1.fd_se)),
                        0.0);
  }
  const auto d2 = entropy_second_derivative(ctx, lambda);
  table.add_predicate("d2theta_dlambda2_fd_gap", lambda, d2.rel_gap,
                      std::fabs(d2.formula.mean - d2.finite_difference) <=
                          std::max(0.10 * std::fabs(d2.finite_difference),
                                   3.0 * (d2.formula.se + d2.fd_se)),
                      0.0);
}

}  // namespace

int run_simulate(const ScenarioConfig& cfg) {
  Timer timer;
  const auto ctx = cfg.context();
  fs::create_directories(cfg.out_dir);
  std::ofstream csv;
  if (cfg.write_csv) {
    csv.open(cfg.out_dir + "/paths.csv");
    csv << "lambda,path,m,base_terminal,obs_terminal,drift_energy,"
           "filtered_energy,minus_log_rho_hat,drift_mmse\n";
  }
  nlohmann::ordered_json json_rows = nlohmann::ordered_json::array();
  bool collapsed = false;
  for (double lambda : cfg.lambda_grid) {
    const auto batch = simulate_paths(ctx, lambda, PathOptions{});
    collapsed = collapsed || batch.any_collapsed;
    for (std::size_t p = 0; p < batch.records.size(); ++p) {
      const auto& r = batch.records[p];
      if (cfg.write_csv)
        csv << fmt_double(lambda) << ',' << p << ',' << fmt_double(r.m) << ','
            << fmt_double(r.base_terminal) << ',' << fmt_double(r.obs_terminal)
            << ',' << fmt_double(r.drift_energy) << ','
            << fmt_double(r.filtered_energy) << ','
            << fmt_double(r.minus_log_rho_hat) << ','
            << fmt_double(r.drift_mmse) << '\n';
      if (cfg.write_json)
        json_rows.push_back({{"lambda", lambda},
                             {"path", p},
                             {"m", r.m},
                             {"base_terminal", r.base_terminal},
                             {"obs_terminal", r.obs_terminal},
                             {"drift_energy", r.drift_energy},
                             {"filtered_energy", r.filtered_energy},
                             {"minus_log_rho_hat", r.minus_log_rho_hat},
                             {"drift_mmse", r.drift_mmse}});
    }
  }
  if (cfg.write_json) {
    nlohmann::ordered_json root;
    root["schema_version"] = 1;
    root["rows"] = json_rows;
    std::ofstream out(cfg.out_dir + "/paths.json");
    out << root.dump(2) << '\n';
  }
  log_timing("simulate", timer);
  return collapsed ? kExitNumericalCollapse : kExitOk;
}

int run_verify(const ScenarioConfig& cfg) {
  ReportTable table;
  try {
    Timer t_entropy;
    verify_entropy_identity(cfg, table);
    log_timing("verify: entropy", t_entropy);
    Timer t_norm;
    verify_normalizations(cfg, table);
    log_timing("verify: normalizations", t_norm);
    Timer t_conj;
    verify_conjugate_identity(cfg, table);
    log_timing("verify: conjugate", t_conj);
    Timer t_mal;
    verify_malliavin(cfg, table);
    log_timing("verify: malliavin", t_mal);
    Timer t_innov;
    verify_innovations(cfg, table);
    log_timing("verify: innovations", t_innov);
    Timer t_rep;
    verify_theorem3(cfg, table);
    log_timing("verify: theorem3", t_rep);
    Timer t_round;
    verify_roundtrip(cfg, table);
    log_timing("verify: roundtrip", t_round);
    Timer t_deriv;
    verify_derivatives(cfg, table);
    log_timing("verify: derivatives", t_deriv);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "[wlab] numerical failure: %s\n", e.what());
    return kExitNumericalCollapse;
  }
  write_table(cfg, table, "verify");
  for (const auto& row : table.rows())
    if (row.pass && !*row.pass)
      std::fprintf(stderr, "[wlab] FAILED %s lambda=%s estimate=%s\n",
                   row.quantity.c_str(),
                   row.lambda ? fmt_double(*row.lambda).c_str() : "-",
                   fmt_double(row.estimate).c_str());
  return table.all_passed() ? kExitOk : kExitCheckFailed;
}

int run_sweep(const ScenarioConfig& cfg) {
  Timer timer;
  ReportTable table;
  const auto ctx = cfg.context();
  bool collapsed = false;
  try {
    if (cfg.model.uses_parameter()) {
      const auto rows = immse_sweep(ctx, cfg.lambda_grid, true);
      for (const auto& row : rows) {
        add_estimate_row(table, cfg, "mutual_information", row.lambda,
                         row.mutual_information, 0.03);
        add_estimate_row(table, cfg, "drift_mmse", row.lambda, row.drift_mmse,
                         0.03);
        add_estimate_row(table, cfg, "signal_mmse", row.lambda,
                         row.signal_mmse, 0.03);
        add_estimate_row(table, cfg, "drift_nce", row.lambda, row.drift_nce,
                         0.05);
        if (row.has_dmi_fd) {
          const auto oracle_value = oracle_for(cfg, "dmi_dlambda", row.lambda);
          if (oracle_value)
            table.add_checked("dmi_dlambda_fd", row.lambda, row.dmi_fd, 0.0,
                              *oracle_value, 0.05);
          else
            table.add("dmi_dlambda_fd", row.lambda, row.dmi_fd);
        }
      }
    } else {
      for (double lambda : cfg.lambda_grid) {
        const auto report = entropy(ctx, lambda);
        collapsed = collapsed || report.collapsed;
        add_estimate_row(table, cfg, "theta_direct", lambda,
                         report.theta_direct, 0.03);
        add_estimate_row(table, cfg, "theta_rho", lambda, report.theta_rho,
                         0.03);
        const auto gap = invertibility_gap(ctx, lambda);
        add_estimate_row(table, cfg, "invertibility_gap", lambda, gap, 0.05);
      }
    }
    const auto continuity = lambda_continuity_sweep(ctx, cfg.lambda_grid);
    for (std::size_t k = 0; k < continuity.jumps.size(); ++k)
      table.add("filtered_drift_jump", continuity.lambdas[k + 1],
                continuity.jumps[k]);
    if (cfg.model.observation_form() && cfg.lambda_grid.size() >= 3 &&
        cfg.lambda_grid.front() == 0.0) {
      const std::vector<double> probe_grid(cfg.lambda_grid.begin(),
                                           cfg.lambda_grid.begin() + 3);
      const auto probe = beta_probe(ctx, probe_grid);
      for (std::size_t k = 0; k < probe.lambdas.size(); ++k)
        table.add("beta_integral", probe.lambdas[k], probe.beta_integral[k]);
      table.add_predicate("beta_second_difference_zero", 0.0,
                          probe.second_difference_at_zero,
                          probe.convex_near_zero, std::nullopt,
                          probe.second_difference_se);
    }
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "[wlab] numerical failure: %s\n", e.what());
    return kExitNumericalCollapse;
  }
  write_table(cfg, table, "sweep");
  log_timing("sweep", timer);
  if (collapsed) return kExitNumericalCollapse;
  return table.all_passed() ? kExitOk : kExitCheckFailed;
}

int run_report(const std::string& out_dir, bool write_csv, bool write_json) {
  ReportTable summary;
  int total = 0, failed = 0;
  std::vector<fs::path> inputs;
  if (!fs::exists(out_dir)) throw ConfigError("no such directory: " + out_dir);
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() == ".json" && name != "report.json" &&
        name != "paths.json")
      inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  for (const auto& path : inputs) {
    std::ifstream in(path);
    nlohmann::ordered_json root;
    try {
      in >> root;
    } catch (const std::exception&) {
      continue;
    }
    if (!root.contains("rows")) continue;
    for (const auto& row : root["rows"]) {
      ++total;
      const bool gated = row.contains("pass") && !row["pass"].is_null();
      const bool ok = !gated || row["pass"].get<bool>();
      if (!ok) ++failed;
      const std::string quantity =
          path.stem().string() + ":" + row["quantity"].get<std::string>();
      std::optional<double> lambda;
      if (!row["lambda"].is_null()) lambda = row["lambda"].get<double>();
      if (gated)
        summary.add_predicate(quantity, lambda, row["estimate"].get<double>(),
                              ok);
      else
        summary.add(quantity, lambda, row["estimate"].get<double>());
    }
  }
  std::fprintf(stderr, "[wlab] report: %d rows aggregated, %d failed\n", total,
               failed);
  if (write_csv) summary.write_csv(out_dir + "/report.csv");
  if (write_json) summary.write_json(out_dir + "/report.json");
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

int run_scenario(const RunOptions& options) {
  ScenarioConfig cfg = load_scenario(options.config_path);
  if (options.seed_override) cfg.seed = *options.seed_override;
  if (const char* env = std::getenv("WLAB_OUT_DIR")) cfg.out_dir = env;
  if (options.out_override) cfg.out_dir = *options.out_override;

  if (options.subcommand == "simulate") return run_simulate(cfg);
  if (options.subcommand == "verify") return run_verify(cfg);
  if (options.subcommand == "sweep") return run_sweep(cfg);
  if (options.subcommand == "report")
    return run_report(cfg.out_dir, cfg.write_csv, cfg.write_json);
  throw ConfigError("unknown subcommand: " + options.subcommand);
}

}  // namespace wlab
