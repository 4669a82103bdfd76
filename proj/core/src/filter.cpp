#include "wlab/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wlab/constants.hpp"
#include "wlab/quadrature.hpp"

namespace wlab {

namespace {

void require_observation_form(const DriftModel& model, const char* who) {
  if (!model.observation_form())
    throw UnsupportedModelError(std::string(who) +
                                ": raw path-functional drifts have no "
                                "tractable conditional law");
}

std::vector<double> prior_support(const DriftModel& model,
                                  const EngineSpec& engine, RngStream* rng,
                                  std::vector<double>* weights) {
  if (!model.uses_parameter()) {
    if (weights) *weights = {1.0};
    return {model.prior().mean()};
  }
  const auto& law = model.prior();
  if (engine.type == EngineType::kParticle) {
    if (!rng)
      throw std::invalid_argument("prior_support: particle engine needs rng");
    // Stratified draws from the prior: one point per probability stratum.
    // The empirical measure is still an unbiased carrier of the prior and
    // the initialization noise drops well below the iid 1/sqrt(N) floor.
    const int n = engine.size;
    std::vector<double> m(n);
    for (int k = 0; k < n; ++k)
      m[k] = law.quantile((k + rng->uniform01()) / n);
    if (weights) weights->assign(n, 1.0 / n);
    return m;
  }
  QuadratureRule rule;
  switch (law.kind) {
    case ParameterLaw::Kind::kGaussian:
      rule = gauss_hermite_prob(engine.size, law.sigma2);
      break;
    case ParameterLaw::Kind::kUniform:
      rule = gauss_legendre_prob(engine.size, law.lo, law.hi);
      break;
    case ParameterLaw::Kind::kPointMass:
      rule.nodes = {law.value};
      rule.weights = {1.0};
      break;
  }
  if (weights) *weights = rule.weights;
  return rule.nodes;
}

double log_sum_exp(std::span<const double> v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

double ensemble_ess(std::span<const double> weights) {
  double ss = 0.0;
  for (double w : weights) ss += w * w;
  return ss > 0.0 ? 1.0 / ss : 0.0;
}

// Systematic resampling: one uniform offset, N evenly spaced pointers.
void systematic_resample(std::vector<double>& m, std::vector<double>& weights,
                         RngStream& rng) {
  const int n = static_cast<int>(m.size());
  std::vector<double> resampled(n);
  const double step = 1.0 / n;
  double pointer = rng.uniform01() * step;
  double cum = weights[0];
  int idx = 0;
  for (int k = 0; k < n; ++k) {
    while (pointer > cum && idx + 1 < n) cum += weights[++idx];
    resampled[k] = m[idx];
    pointer += step;
  }
  m.swap(resampled);
  std::fill(weights.begin(), weights.end(), step);
}

FilterOutput filter_impl(const DriftModel& model, double lambda,
                         const TimeGrid& grid,
                         std::span<const double> obs_values,
                         std::vector<double> m, std::vector<double> weights,
                         EngineType engine, RngStream* resample_rng) {
  const int n = grid.n_steps;
  const int k = static_cast<int>(m.size());
  if (static_cast<int>(obs_values.size()) != n + 1)
    throw std::invalid_argument("filter: obs_values must hold n_steps+1 nodes");

  FilterOutput out;
  out.engine = engine;
  out.filtered.resize(n);
  out.log_normalizer.resize(n);
  if (model.uses_parameter()) out.post_mean_m.resize(n);
  out.min_ess = ensemble_ess(weights);

  std::vector<double> drift(k);
  std::vector<double> shifted(k);
  const double dt = grid.dt;
  const double g = model.parametrization().g(lambda);

  for (int i = 0; i < n; ++i) {
    std::span<const double> hist(obs_values.data(), i + 1);
    double f = 0.0, mbar = 0.0;
    for (int j = 0; j < k; ++j) {
      drift[j] = g * model.unit_drift(grid, i, hist, m[j]);
      f += weights[j] * drift[j];
      mbar += weights[j] * m[j];
    }
    out.filtered[i] = f;
    if (!out.post_mean_m.empty()) out.post_mean_m[i] = mbar;

    // Weight update in log space, renormalized every step; the dropped
    // normalization is exactly the marginal-likelihood increment.
    const double du = obs_values[i + 1] - obs_values[i];
    for (int j = 0; j < k; ++j)
      shifted[j] = std::log(weights[j]) + drift[j] * du -
                   0.5 * drift[j] * drift[j] * dt;
    const double increment = log_sum_exp(shifted);
    if (!std::isfinite(increment))
      throw std::runtime_error("filter: degenerate weight update");
    for (int j = 0; j < k; ++j) weights[j] = std::exp(shifted[j] - increment);
    out.log_normalizer[i] = increment;
    out.log_marginal += increment;

    const double ess = ensemble_ess(weights);
    out.min_ess = std::min(out.min_ess, ess);
    if (engine == EngineType::kParticle && resample_rng && k > 1 &&
        ess < constants::kResampleEssFraction * k)
      systematic_resample(m, weights, *resample_rng);
  }

  out.collapsed = k > 1 && out.min_ess < constants::kEssCollapseFloor;

  double mean = 0.0, second = 0.0;
  for (int j = 0; j < k; ++j) {
    mean += weights[j] * m[j];
    second += weights[j] * m[j] * m[j];
  }
  out.terminal_mean_m = mean;
  out.terminal_var_m = std::max(0.0, second - mean * mean);
  return out;
}

}  // namespace

double ParticleEnsemble::ess() const { return ensemble_ess(weights); }

FilterOutput run_filter(const DriftModel& model, double lambda,
                        const TimeGrid& grid,
                        std::span<const double> obs_values, int n_particles,
                        RngStream rng) {
  require_observation_form(model, "run_filter");
  if (n_particles < 1)
    throw std::invalid_argument("run_filter: need at least one particle");
  EngineSpec spec{EngineType::kParticle, n_particles};
  std::vector<double> weights;
  auto m = prior_support(model, spec, &rng, &weights);
  return filter_impl(model, lambda, grid, obs_values, std::move(m),
                     std::move(weights), EngineType::kParticle, &rng);
}

FilterOutput quadrature_filter(const DriftModel& model, double lambda,
                               const TimeGrid& grid,
                               std::span<const double> obs_values,
                               int n_nodes) {
  require_observation_form(model, "quadrature_filter");
  EngineSpec spec{EngineType::kQuadrature, n_nodes};
  std::vector<double> weights;
  auto m = prior_support(model, spec, nullptr, &weights);
  return filter_impl(model, lambda, grid, obs_values, std::move(m),
                     std::move(weights), EngineType::kQuadrature, nullptr);
}

FilterOutput filter_with_engine(const DriftModel& model, double lambda,
                                const TimeGrid& grid,
                                std::span<const double> obs_values,
                                const EngineSpec& engine, RngStream rng) {
  return engine.type == EngineType::kParticle
             ? run_filter(model, lambda, grid, obs_values, engine.size, rng)
             : quadrature_filter(model, lambda, grid, obs_values, engine.size);
}

InnovationPath innovation(const TimeGrid& grid,
                          std::span<const double> obs_values,
                          const FilterOutput& filter) {
  const int n = grid.n_steps;
  if (static_cast<int>(filter.filtered.size()) != n ||
      static_cast<int>(obs_values.size()) != n + 1)
    throw std::invalid_argument("innovation: size mismatch");
  InnovationPath z;
  z.increments.resize(n);
  z.values.resize(n + 1);
  z.values[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    z.increments[i] =
        obs_values[i + 1] - obs_values[i] - filter.filtered[i] * grid.dt;
    z.values[i + 1] = z.values[i] + z.increments[i];
  }
  return z;
}

RhoHat conditional_rho_hat(const TimeGrid& grid,
                           std::span<const double> obs_values,
                           const FilterOutput& filter) {
  const int n = grid.n_steps;
  const auto z = innovation(grid, obs_values, filter);
  double via_innovation = 0.0;  // sum f dZ + 1/2 sum f^2 dt
  double via_observation = 0.0;  // sum f dU - 1/2 sum f^2 dt
  for (int i = 0; i < n; ++i) {
    const double f = filter.filtered[i];
    const double du = obs_values[i + 1] - obs_values[i];
    via_innovation += f * z.increments[i] + 0.5 * f * f * grid.dt;
    via_observation += f * du - 0.5 * f * f * grid.dt;
  }
  RhoHat rho;
  rho.log_value = -via_innovation;
  rho.accounting_gap = std::fabs(via_innovation - via_observation);
  rho.mixture_gap = rho.log_value + filter.log_marginal;
  return rho;
}

std::vector<double> smoother(const DriftModel& model, double lambda,
                             const TimeGrid& grid,
                             std::span<const double> obs_values,
                             const EngineSpec& engine, RngStream rng) {
  require_observation_form(model, "smoother");
  const auto posterior =
      terminal_posterior(model, lambda, grid, obs_values, engine, rng);
  const auto& m = posterior.ensemble.m;
  const auto& w = posterior.ensemble.weights;
  const int n = grid.n_steps;
  const int k = static_cast<int>(m.size());
  const double g = model.parametrization().g(lambda);
  std::vector<double> smoothed(n, 0.0);
  for (int i = 0; i < n; ++i) {
    std::span<const double> hist(obs_values.data(), i + 1);
    double acc = 0.0;
    for (int j = 0; j < k; ++j)
      acc += w[j] * g * model.unit_drift(grid, i, hist, m[j]);
    smoothed[i] = acc;
  }
  return smoothed;
}

TerminalPosterior terminal_posterior(const DriftModel& model, double lambda,
                                     const TimeGrid& grid,
                                     std::span<const double> obs_values,
                                     const EngineSpec& engine, RngStream rng) {
  require_observation_form(model, "terminal_posterior");
  const int n = grid.n_steps;
  if (static_cast<int>(obs_values.size()) != n + 1)
    throw std::invalid_argument("terminal_posterior: bad obs length");
  std::vector<double> prior_w;
  auto m = prior_support(model, engine, &rng, &prior_w);
  const int k = static_cast<int>(m.size());
  const double g = model.parametrization().g(lambda);

  // Full-path log likelihood per support point; no resampling here so the
  // non-causal weights stay unbiased.
  std::vector<double> lw(k);
  for (int j = 0; j < k; ++j) lw[j] = std::log(prior_w[j]);
  for (int i = 0; i < n; ++i) {
    std::span<const double> hist(obs_values.data(), i + 1);
    const double du = obs_values[i + 1] - obs_values[i];
    for (int j = 0; j < k; ++j) {
      const double d = g * model.unit_drift(grid, i, hist, m[j]);
      lw[j] += d * du - 0.5 * d * d * grid.dt;
    }
  }
  const double log_z = log_sum_exp(lw);
  TerminalPosterior posterior;
  posterior.log_marginal = log_z;
  posterior.ensemble.m = std::move(m);
  posterior.ensemble.weights.resize(k);
  for (int j = 0; j < k; ++j)
    posterior.ensemble.weights[j] = std::exp(lw[j] - log_z);
  return posterior;
}

WienerPath reconstruct_base(const DriftModel& model, double lambda,
                            const TimeGrid& grid,
                            std::span<const double> obs_values, double m) {
  require_observation_form(model, "reconstruct_base");
  const int n = grid.n_steps;
  if (static_cast<int>(obs_values.size()) != n + 1)
    throw std::invalid_argument("reconstruct_base: bad obs length");
  std::vector<double> inc(n);
  for (int i = 0; i < n; ++i) {
    std::span<const double> hist(obs_values.data(), i + 1);
    const double d = model.eval_drift(lambda, grid, i, hist, m);
    inc[i] = obs_values[i + 1] - obs_values[i] - d * grid.dt;
  }
  return WienerPath(grid, std::move(inc));
}

double condition_on_observation(
    const DriftModel& model, double lambda, const TimeGrid& grid,
    std::span<const double> obs_values, const TerminalPosterior& posterior,
    const std::function<double(const WienerPath&, double)>& phi) {
  const auto& m = posterior.ensemble.m;
  const auto& w = posterior.ensemble.weights;
  double acc = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (w[j] == 0.0) continue;
    const auto base = reconstruct_base(model, lambda, grid, obs_values, m[j]);
    acc += w[j] * phi(base, m[j]);
  }
  return acc;
}

}  // namespace wlab
