#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wlab/filter.hpp"
#include "wlab/malliavin.hpp"
#include "wlab/model.hpp"
#include "wlab/path.hpp"

namespace wlab {

// Positive quantity carried in the log domain; exponentiation is deferred
// to reporting and flagged when it would overflow a double.
struct LogDomainValue {
  double log_value = 0.0;
  bool overflow() const { return log_value > 709.0; }
  double value() const { return std::exp(log_value); }
};

// Girsanov exponential rho(-delta u) = exp(-sum udot dW - 1/2 sum udot^2 dt).
LogDomainValue rho(const CameronMartinPath& u, const WienerPath& w);

// K_lambda u'_lambda = (I + grad u_lambda)^{-1} u'_lambda as a density
// vector at the sampled point (w, m).
std::vector<double> resolvent_drift_derivative(const DriftModel& model,
                                               double lambda,
                                               const WienerPath& w, double m);

// delta(K_lambda u'_lambda) at the sampled point.  The field is adapted, so
// the divergence is the Ito sum of the resolved density.
double density_exponent_field(const DriftModel& model, double lambda,
                              const WienerPath& w, double m);

// Second variation field
//   D = delta(K u') K u' - K grad u' K u' + K u''
// together with its divergence
//   delta(D) = delta(K u')^2 - <grad delta(K u'), K u'>_H
//            - delta(K grad u' K u') + delta(K u'').
// The gradient of the scalar delta(K u') is exact for models whose drift
// Jacobian does not depend on the path; otherwise it falls back to central
// finite differences on the increments (O(n^3), test-scale only).
struct SecondVariationField {
  std::vector<double> density;
  double divergence = 0.0;
};

SecondVariationField second_variation(const DriftModel& model, double lambda,
                                      const WienerPath& w, double m);

enum class DensityEstimatorTag { kClosedForm, kRepresentation, kFilterBased };

struct DensityEstimate {
  double lambda = 0.0;
  double log_value = 0.0;
  DensityEstimatorTag tag = DensityEstimatorTag::kRepresentation;
  bool overflow() const { return log_value > 709.0; }
  double value() const { return std::exp(log_value); }
};

// Exponential representation of the density of U_lambda(mu) at the point w:
//   L_lambda(w) = exp integral_0^lambda E[delta(K_a u'_a) | U_a = w] da,
// integrated by the trapezoid rule on the supplied grid (lambdas[0] must be
// 0, where L_0 = 1; parametrizations with u_0 != 0 are rejected).
// With m supplied the per-m conditional density is produced; without it the
// signal parameter is mixed out through the conditioning engine.
std::vector<DensityEstimate> density_along_lambda(
    const DriftModel& model, std::span<const double> lambdas,
    const WienerPath& w, std::optional<double> m, const EngineSpec& engine,
    RngStream rng);

// Closed-form log density of the observation path under the model, when one
// exists: Cameron-Martin for deterministic shifts, the SDE Girsanov density
// for markov drifts, and the gaussian-mixture marginal for the channel.
std::optional<double> closed_form_log_density(const DriftModel& model,
                                              double lambda,
                                              const TimeGrid& grid,
                                              std::span<const double> obs_values);

struct ConjugateIdentityStats {
  double mean_abs_residual = 0.0;
  double max_abs_residual = 0.0;
  double mean_rho_times_l = 0.0;
  int n_paths = 0;
};

// Distribution of |L(U) rho_hat - 1| over sampled paths: L(U) from the
// closed form (or the engine's mixture marginal when no closed form
// exists), rho_hat from the filtered innovations.
ConjugateIdentityStats conjugate_identity_check(const DriftModel& model,
                                                double lambda,
                                                const TimeGrid& grid,
                                                int n_paths,
                                                const EngineSpec& engine,
                                                std::uint64_t seed);

}  // namespace wlab
