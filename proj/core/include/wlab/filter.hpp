#pragma once

#include <functional>
#include <span>
#include <vector>

#include "wlab/model.hpp"
#include "wlab/path.hpp"

namespace wlab {

enum class EngineType { kQuadrature, kParticle };

struct EngineSpec {
  EngineType type = EngineType::kQuadrature;
  int size = 128;  // quadrature nodes or particle count
};

// Discrete carrier of the conditional law of m: support points and
// normalized weights.
struct ParticleEnsemble {
  std::vector<double> m;
  std::vector<double> weights;  // sum to 1
  double ess() const;
};

// Causal filter output along one observation path.
//
// filtered[i] is the conditional mean of the drift at t_i given the
// observation strictly before t_i (predictable evaluation);
// log_normalizer[i] is the mixture-likelihood increment of step i, and the
// increments telescope exactly to log_marginal = log Lhat(obs), the
// marginal density of the observation path w.r.t. Wiener measure.
struct FilterOutput {
  std::vector<double> filtered;
  std::vector<double> log_normalizer;
  double log_marginal = 0.0;
  std::vector<double> post_mean_m;  // E[m | past obs] per step; empty unless
                                    // the model carries a signal parameter
  double terminal_mean_m = 0.0;     // E[m | full path]
  double terminal_var_m = 0.0;      // Var(m | full path)
  EngineType engine = EngineType::kQuadrature;
  double min_ess = 0.0;
  bool collapsed = false;
};

struct InnovationPath {
  std::vector<double> increments;  // dZ_i = dU_i - filtered[i] dt
  std::vector<double> values;      // Z(t_i), Z(0) = 0
};

// Girsanov weight of the filtered drift along the innovation, with the two
// algebraically equivalent accountings (via dZ and via dU) compared:
//   -log rho_hat = sum f dZ + 1/2 sum f^2 dt = sum f dU - 1/2 sum f^2 dt.
// mixture_gap records log rho_hat + log_marginal, the Euler-discretization
// residual of the conjugate identity Lhat(U) rho_hat = 1.
struct RhoHat {
  double log_value = 0.0;
  double accounting_gap = 0.0;  // |innovation form - observation form|
  double mixture_gap = 0.0;     // log rho_hat + log Lhat(obs)
};

// Sequential Monte Carlo conditioning: particles sampled from the prior,
// log-weights accumulate udot dU - 1/2 udot^2 dt, systematic resampling
// when ESS < size/2.  rng must be the path's dedicated particle stream.
FilterOutput run_filter(const DriftModel& model, double lambda,
                        const TimeGrid& grid,
                        std::span<const double> obs_values, int n_particles,
                        RngStream rng);

// Deterministic Gauss-Hermite / Gauss-Legendre nodes in place of particles;
// no resampling.  Serves as the brute-force oracle for run_filter.
FilterOutput quadrature_filter(const DriftModel& model, double lambda,
                               const TimeGrid& grid,
                               std::span<const double> obs_values,
                               int n_nodes);

FilterOutput filter_with_engine(const DriftModel& model, double lambda,
                                const TimeGrid& grid,
                                std::span<const double> obs_values,
                                const EngineSpec& engine, RngStream rng);

InnovationPath innovation(const TimeGrid& grid,
                          std::span<const double> obs_values,
                          const FilterOutput& filter);

RhoHat conditional_rho_hat(const TimeGrid& grid,
                           std::span<const double> obs_values,
                           const FilterOutput& filter);

// Non-causal estimate E[udot(t_i) | full observation path]: terminal
// weights (never resampled) applied to the per-step drift values.
std::vector<double> smoother(const DriftModel& model, double lambda,
                             const TimeGrid& grid,
                             std::span<const double> obs_values,
                             const EngineSpec& engine, RngStream rng);

// Terminal conditional law of m given the whole observation path, plus the
// mixture log-marginal log Lhat(obs).
struct TerminalPosterior {
  ParticleEnsemble ensemble;
  double log_marginal = 0.0;
};

TerminalPosterior terminal_posterior(const DriftModel& model, double lambda,
                                     const TimeGrid& grid,
                                     std::span<const double> obs_values,
                                     const EngineSpec& engine, RngStream rng);

// Base path recovered from an observation path for a given parameter value:
// dw_i = dU_i - udot_lambda(t_i, obs history, m) dt.  This is the exact
// discrete inverse of build_u for observation-form models.
WienerPath reconstruct_base(const DriftModel& model, double lambda,
                            const TimeGrid& grid,
                            std::span<const double> obs_values, double m);

// E[phi(w, m) | U = obs] via the Bayes mixture: evaluate phi on the
// reconstructed base path per support point, average under the terminal
// posterior.
double condition_on_observation(
    const DriftModel& model, double lambda, const TimeGrid& grid,
    std::span<const double> obs_values, const TerminalPosterior& posterior,
    const std::function<double(const WienerPath&, double)>& phi);

}  // namespace wlab
