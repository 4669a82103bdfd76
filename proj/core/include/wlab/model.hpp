#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wlab/path.hpp"

namespace wlab {

// Thrown when an operation requires the drift to factor through the
// observation history and a raw path functional is supplied instead.
class UnsupportedModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Law of the exterior signal parameter m, sampled independently of the
// Wiener path.
struct ParameterLaw {
  enum class Kind { kGaussian, kPointMass, kUniform };

  static ParameterLaw gaussian(double sigma2);
  static ParameterLaw point_mass(double c);
  static ParameterLaw uniform(double a, double b);

  double sample(RngStream& rng) const;
  // Inverse CDF, used for stratified particle initialization.
  double quantile(double u) const;
  double mean() const;
  double variance() const;

  Kind kind = Kind::kPointMass;
  double sigma2 = 0.0;  // gaussian
  double value = 0.0;   // point mass
  double lo = 0.0, hi = 0.0;  // uniform
};

// Scalar coefficient family g(lambda) multiplying the unit drift.
// The lambda derivatives of every built-in drift are g'(lambda) and
// g''(lambda) times the same unit drift, evaluated on the same history.
struct LambdaParametrization {
  enum class Kind { kLinear, kQuadratic, kConstant };
  Kind kind = Kind::kLinear;

  double g(double lambda) const {
    switch (kind) {
      case Kind::kLinear: return lambda;
      case Kind::kQuadratic: return lambda * lambda;
      case Kind::kConstant: return 1.0;
    }
    return 0.0;
  }
  double g1(double lambda) const {
    switch (kind) {
      case Kind::kLinear: return 1.0;
      case Kind::kQuadratic: return 2.0 * lambda;
      case Kind::kConstant: return 0.0;
    }
    return 0.0;
  }
  double g2(double) const {
    return kind == Kind::kQuadratic ? 2.0 : 0.0;
  }
  const char* name() const {
    switch (kind) {
      case Kind::kLinear: return "linear";
      case Kind::kQuadratic: return "quadratic";
      case Kind::kConstant: return "constant";
    }
    return "?";
  }
};

enum class DriftKind {
  kDeterministic,   // udot = g(lambda) * hdot(s); no randomness
  kGaussChannel,    // udot = g(lambda) * m; m ~ prior, constant in time
  kMarkov,          // udot = g(lambda) * f(U(s)); observation-form SDE drift
  kPathFunctional,  // udot = g(lambda) * f(W(s)); raw drift, filter rejects
};

// Which path the history argument of eval_drift refers to.
enum class HistoryKind { kNone, kObservation, kBasePath };

// A pointwise scalar map with its derivative; drift nonlinearities
// (markov f, path functional f) are carried in this form.
struct ScalarMap {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::string name;
};

// Realized shift for one sampled (w, m): the Cameron-Martin drift path u
// and the observation path U = w + u (node values, size n_steps + 1).
struct ShiftRealization {
  CameronMartinPath u;
  std::vector<double> obs_values;
};

// lambda-parametrized adapted drift family.  Immutable and shareable;
// evaluation is pure.
class DriftModel {
 public:
  static DriftModel deterministic(std::function<double(double)> hdot,
                                  LambdaParametrization p = {},
                                  std::string hdot_name = "hdot");
  static DriftModel gauss_channel(double sigma2, LambdaParametrization p = {});
  // Constant-signal channel with an arbitrary prior (gaussian / uniform /
  // point mass); gauss_channel is the gaussian special case.
  static DriftModel channel(ParameterLaw prior, LambdaParametrization p = {});
  static DriftModel markov(ScalarMap f, LambdaParametrization p = {});
  static DriftModel path_functional(ScalarMap f, LambdaParametrization p = {});

  DriftKind kind() const { return kind_; }
  const LambdaParametrization& parametrization() const { return param_; }
  const ParameterLaw& prior() const { return prior_; }
  const ScalarMap& nonlinearity() const { return map_; }
  double det_density(double t) const { return hdot_(t); }
  std::string describe() const;

  // Unit drift b(t_i, history, m); the full drift is g(lambda) * b.
  // history holds node values of the relevant path up to index `step`
  // (observation path for markov, base path for path functionals).
  double unit_drift(const TimeGrid& grid, int step,
                    std::span<const double> history, double m) const;

  // udot_lambda(t_i) = g(lambda) * b.
  double eval_drift(double lambda, const TimeGrid& grid, int step,
                    std::span<const double> history, double m) const;

  // Analytic d^order/dlambda^order of eval_drift at fixed history,
  // order in {1, 2}.
  double lambda_derivative(double lambda, int order, const TimeGrid& grid,
                           int step, std::span<const double> history,
                           double m) const;

  // True when the drift factors through (m, observation history): the
  // conditional law of m given the observation is computable and the
  // filtering module accepts the model.
  bool observation_form() const { return kind_ != DriftKind::kPathFunctional; }

  bool uses_parameter() const { return kind_ == DriftKind::kGaussChannel; }

  HistoryKind history_kind() const {
    switch (kind_) {
      case DriftKind::kMarkov: return HistoryKind::kObservation;
      case DriftKind::kPathFunctional: return HistoryKind::kBasePath;
      default: return HistoryKind::kNone;
    }
  }

  // Sufficient Novikov-style condition for E[rho(-delta u)] = 1: the unit
  // drift is bounded.  The gaussian channel is the exception (unbounded m);
  // its normalization is audited empirically by the Girsanov module.
  bool novikov_guaranteed() const;

  // True when the Jacobian of the unit drift does not depend on the path
  // (deterministic, channel, linear path functional): second-order fields
  // then assemble analytically.
  bool jacobian_state_free() const;

  double sample_parameter(RngStream& rng) const { return prior_.sample(rng); }

 private:
  DriftModel() = default;

  DriftKind kind_ = DriftKind::kDeterministic;
  LambdaParametrization param_;
  ParameterLaw prior_ = ParameterLaw::point_mass(0.0);
  ScalarMap map_;
  std::function<double(double)> hdot_;
  std::string hdot_name_;
};

// Full discrete drift path u_lambda for one sampled (w, m), accumulated
// jointly with the observation U = w + u (markov drifts read U back).
ShiftRealization build_u(const DriftModel& model, double lambda,
                         const WienerPath& w, double m);

// Density vector of d^order/dlambda^order u_lambda along a realized
// observation/base history (order 0, 1 or 2).
std::vector<double> drift_field(const DriftModel& model, double lambda,
                                int order, const TimeGrid& grid,
                                std::span<const double> obs_values,
                                std::span<const double> base_values, double m);

// Common scalar maps for the model zoo.
ScalarMap tanh_map();
ScalarMap identity_map();

}  // namespace wlab
