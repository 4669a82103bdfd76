#pragma once

#include <cstdint>
#include <vector>

#include "wlab/filter.hpp"
#include "wlab/model.hpp"
#include "wlab/stats.hpp"

namespace wlab {

// One Monte Carlo batch specification.  Streams are keyed by path index, so
// batches at different lambda values with the same context share noise
// (common random numbers); antithetic pairing negates the increments of
// every odd path while keeping its parameter draw.
struct ScenarioContext {
  DriftModel model;
  TimeGrid grid{64};
  EngineSpec engine;
  int n_paths = 1024;
  std::uint64_t seed = 1;
  bool antithetic = true;
  int smoother_size = 0;  // 0: reuse engine.size for the smoother
};

// Per-path functionals; which ones are populated depends on PathOptions.
struct PathRecord {
  double m = 0.0;
  double base_terminal = 0.0;
  double obs_terminal = 0.0;
  double drift_energy = 0.0;     // sum udot^2 dt
  double filtered_energy = 0.0;  // sum f^2 dt
  double minus_log_rho_hat = 0.0;
  double log_marginal = 0.0;
  double log_rho = 0.0;  // log rho(-delta u) at the sample
  double drift_mmse = 0.0;
  double signal_mmse = 0.0;
  double smoothed_energy = 0.0;
  double drift_nce = 0.0;
  double signal_nce = 0.0;
  double delta_ku = 0.0;        // delta(K u') at the sample
  double cond_delta_ku = 0.0;   // E[delta(K u') | U]
  double cond_delta_dd = 0.0;   // E[delta(D) | U]
  double terminal_var_m = 0.0;
  double min_ess = 0.0;
  bool collapsed = false;
};

struct PathOptions {
  bool filtering = true;
  bool smoothing = false;
  bool first_order = false;   // delta(K u') and its conditional mean
  bool second_order = false;  // conditional mean of delta(D)
};

struct BatchResult {
  std::vector<PathRecord> records;
  std::vector<double> filtered_sq_sum;  // per-step sums of f^2 (optional)
  std::vector<double> smoothed_sq_sum;  // per-step sums of smoothed^2
  bool any_collapsed = false;
};

BatchResult simulate_paths(const ScenarioContext& ctx, double lambda,
                           const PathOptions& options,
                           bool keep_step_sums = false);

// theta estimated two ways: half the filtered energy and the mean of
// -log rho_hat.  diff-se is the jackknife SE of the paired difference.
struct EntropyReport {
  double lambda = 0.0;
  MeanSe theta_direct;
  MeanSe theta_rho;
  double diff_mean = 0.0;
  double diff_se = 0.0;
  int n_paths = 0;
  bool collapsed = false;
};

EntropyReport entropy(const ScenarioContext& ctx, double lambda);

struct MmseReport {
  double lambda = 0.0;
  MeanSe drift_mmse;   // E int (udot - E[udot|past])^2
  MeanSe signal_mmse;  // E int (m - E[m|past])^2 (channel models)
  bool has_signal = false;
};

MmseReport causal_mmse(const ScenarioContext& ctx, double lambda);

struct NceReport {
  double lambda = 0.0;
  MeanSe drift_nce;
  MeanSe signal_nce;
  MeanSe beta_integral;      // E int |smoothed|^2 ds
  std::vector<double> beta;  // E |smoothed(t_i)|^2 per step
  bool has_signal = false;
};

NceReport noncausal_error(const ScenarioContext& ctx, double lambda);

// Formula value with its finite-difference cross check (common random
// numbers across the lambda stencil).
struct DerivativeReport {
  double lambda = 0.0;
  MeanSe formula;
  double finite_difference = 0.0;
  double fd_se = 0.0;
  double rel_gap = 0.0;  // |formula - fd| / max(|fd|, eps)
};

DerivativeReport entropy_derivative(const ScenarioContext& ctx, double lambda);
DerivativeReport entropy_second_derivative(const ScenarioContext& ctx,
                                           double lambda);

struct TauDerivativeReport {
  double lambda = 0.0;
  DerivativeReport first;
  DerivativeReport second;
};

TauDerivativeReport tau_derivatives(const ScenarioContext& ctx, double lambda);

struct InfoReport {
  double lambda = 0.0;
  MeanSe mutual_information;  // I = (term1 - term2)/2
  MeanSe theta_joint;         // E_gamma[L log L] = drift energy / 2 per-m
  MeanSe tau_direct;          // filtered energy / 2
  MeanSe tau_rho;             // mean(-log rho_hat)
  double decomposition_gap = 0.0;  // I - (theta_joint - tau_rho)
  double decomposition_se = 0.0;
  int n_paths = 0;
};

InfoReport mutual_information(const ScenarioContext& ctx, double lambda);

// gap = E||u||^2/2 - theta; zero exactly when the shift is a.s. invertible.
MeanSe invertibility_gap(const ScenarioContext& ctx, double lambda);

struct SweepRow {
  double lambda = 0.0;
  MeanSe mutual_information;
  MeanSe drift_mmse;
  MeanSe signal_mmse;
  MeanSe drift_nce;
  double dmi_fd = 0.0;  // centered dI/dlambda (interior points only)
  bool has_dmi_fd = false;
};

std::vector<SweepRow> immse_sweep(const ScenarioContext& ctx,
                                  const std::vector<double>& lambdas,
                                  bool with_nce = false);

struct ContinuityReport {
  std::vector<double> lambdas;
  std::vector<double> jumps;  // L2 distance between adjacent filtered drifts
  double max_jump = 0.0;
};

ContinuityReport lambda_continuity_sweep(const ScenarioContext& ctx,
                                         const std::vector<double>& lambdas);

struct BetaProbe {
  std::vector<double> lambdas;
  std::vector<double> beta_integral;      // int beta(lambda, s) ds per lambda
  double second_difference_at_zero = 0.0; // d^2/dlambda^2 of the integral
  double second_difference_se = 0.0;
  bool convex_near_zero = false;
};

BetaProbe beta_probe(const ScenarioContext& ctx,
                     const std::vector<double>& lambdas);

}  // namespace wlab
