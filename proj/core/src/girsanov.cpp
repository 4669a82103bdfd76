#include "wlab/girsanov.hpp"

#include <cmath>
#include <stdexcept>

#include "wlab/constants.hpp"

namespace wlab {

namespace {

// Jacobian of the unit drift field (the drift with the lambda coefficient
// stripped), well defined at g(lambda) = 0.
JacobianMatrix unit_gradient_matrix(const DriftModel& model, double lambda,
                                    const WienerPath& w, double m) {
  const TimeGrid& grid = w.grid();
  const int n = grid.n_steps;
  switch (model.kind()) {
    case DriftKind::kDeterministic:
    case DriftKind::kGaussChannel:
      return JacobianMatrix(n);
    case DriftKind::kPathFunctional: {
      JacobianMatrix jac(n);
      const auto& values = w.values();
      for (int i = 0; i < n; ++i) {
        const double slope = model.nonlinearity().df(values[i]);
        for (int j = 0; j < i; ++j) jac.at(i, j) = slope * grid.dt;
      }
      return jac;
    }
    case DriftKind::kMarkov: {
      // Same sensitivity recursion as the full Jacobian; the observation
      // path (and hence the propagation factor) still carries g(lambda).
      const double g = model.parametrization().g(lambda);
      const auto realized = build_u(model, lambda, w, m);
      const auto& obs = realized.obs_values;
      JacobianMatrix jac(n);
      std::vector<double> sens(n, 0.0);
      for (int i = 0; i < n; ++i) {
        const double slope = model.nonlinearity().df(obs[i]);
        for (int j = 0; j < i; ++j) jac.at(i, j) = slope * sens[j] * grid.dt;
        const double growth = 1.0 + g * slope * grid.dt;
        for (int j = 0; j < i; ++j) sens[j] *= growth;
        sens[i] = 1.0;
      }
      return jac;
    }
  }
  throw std::logic_error("unit_gradient_matrix: unknown kind");
}

bool zero_jacobian(const DriftModel& model) {
  return model.kind() == DriftKind::kDeterministic ||
         model.kind() == DriftKind::kGaussChannel;
}

std::vector<double> lambda_field(const DriftModel& model, double lambda,
                                 int order, const WienerPath& w, double m) {
  const auto realized = build_u(model, lambda, w, m);
  return drift_field(model, lambda, order, w.grid(), realized.obs_values,
                     w.values(), m);
}

}  // namespace

LogDomainValue rho(const CameronMartinPath& u, const WienerPath& w) {
  if (u.grid().n_steps != w.grid().n_steps)
    throw std::invalid_argument("rho: grid mismatch");
  const double stoch = ito_integral(u.density(), w);
  return LogDomainValue{-stoch - 0.5 * cm_norm_sq(u)};
}

std::vector<double> resolvent_drift_derivative(const DriftModel& model,
                                               double lambda,
                                               const WienerPath& w, double m) {
  const auto u1 = lambda_field(model, lambda, 1, w, m);
  if (zero_jacobian(model)) return u1;
  const auto jac = gradient_matrix(model, lambda, w, m);
  return resolvent_apply(jac, u1);
}

double density_exponent_field(const DriftModel& model, double lambda,
                              const WienerPath& w, double m) {
  return ito_integral(resolvent_drift_derivative(model, lambda, w, m), w);
}

SecondVariationField second_variation(const DriftModel& model, double lambda,
                                      const WienerPath& w, double m) {
  const TimeGrid& grid = w.grid();
  const int n = grid.n_steps;
  const double dt = grid.dt;
  const auto& param = model.parametrization();
  const auto u1 = lambda_field(model, lambda, 1, w, m);
  const auto u2 = lambda_field(model, lambda, 2, w, m);

  SecondVariationField out;

  if (zero_jacobian(model)) {
    // K = I, grad u' = 0: D = delta(u') u' + u'' and
    // delta(D) = delta(u')^2 - ||u'||_H^2 + delta(u'').
    const double f_scalar = ito_integral(u1, w);
    double norm1 = 0.0;
    out.density.resize(n);
    for (int i = 0; i < n; ++i) {
      out.density[i] = f_scalar * u1[i] + u2[i];
      norm1 += u1[i] * u1[i];
    }
    out.divergence =
        f_scalar * f_scalar - norm1 * dt + ito_integral(u2, w);
    return out;
  }

  const auto unit_jac = unit_gradient_matrix(model, lambda, w, m);
  const double g = param.g(lambda);
  const double g1 = param.g1(lambda);
  JacobianMatrix jac(n);       // grad u  = g  * unit
  JacobianMatrix jac_du(n);    // grad u' = g' * unit
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      jac.at(i, j) = g * unit_jac.at(i, j);
      jac_du.at(i, j) = g1 * unit_jac.at(i, j);
    }

  const auto kv = resolvent_apply(jac, u1);        // K u'
  const double f_scalar = ito_integral(kv, w);      // delta(K u'), adapted
  const auto mid = jac_du.apply(kv);                // grad u' K u'
  const auto term2 = resolvent_apply(jac, mid);     // K grad u' K u'
  const auto term3 = resolvent_apply(jac, u2);      // K u''

  out.density.resize(n);
  for (int i = 0; i < n; ++i)
    out.density[i] = f_scalar * kv[i] - term2[i] + term3[i];

  // <grad delta(K u'), K u'>_H
  double inner;
  if (model.jacobian_state_free()) {
    // grad(K u') = K grad u' exactly; contract without forming  K grad u'.
    const auto y = resolvent_apply_transpose(jac, w.increments());
    double cross = 0.0, norm = 0.0;
    for (int i = 0; i < n; ++i) {
      cross += y[i] * mid[i];
      norm += kv[i] * kv[i];
    }
    inner = norm * dt + cross;
  } else {
    // Central differences of the scalar delta(K u') on each increment.
    const double eps = constants::kGradientFdScale * std::sqrt(dt);
    std::vector<double> inc = w.increments();
    inner = 0.0;
    for (int j = 0; j < n; ++j) {
      const double saved = inc[j];
      inc[j] = saved + eps;
      const double up =
          density_exponent_field(model, lambda, WienerPath(grid, inc), m);
      inc[j] = saved - eps;
      const double dn =
          density_exponent_field(model, lambda, WienerPath(grid, inc), m);
      inc[j] = saved;
      inner += (up - dn) / (2.0 * eps) * kv[j] * dt;
    }
  }

  out.divergence = f_scalar * f_scalar - inner - ito_integral(term2, w) +
                   ito_integral(term3, w);
  return out;
}

std::vector<DensityEstimate> density_along_lambda(
    const DriftModel& model, std::span<const double> lambdas,
    const WienerPath& w, std::optional<double> m, const EngineSpec& engine,
    RngStream rng) {
  if (lambdas.empty() || lambdas.front() != 0.0)
    throw std::invalid_argument(
        "density_along_lambda: lambda grid must start at 0");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1]))
      throw std::invalid_argument("density_along_lambda: grid not increasing");
  if (model.parametrization().g(0.0) != 0.0)
    throw std::invalid_argument(
        "density_along_lambda: u_0 != 0, supply L_0 in closed form");
  if (!model.observation_form())
    throw UnsupportedModelError(
        "density_along_lambda: conditioning engine rejects raw drifts");

  const TimeGrid& grid = w.grid();
  const bool mix_parameter = model.uses_parameter() && !m.has_value();

  auto exponent_at = [&](double alpha) {
    if (mix_parameter) {
      const auto posterior = terminal_posterior(model, alpha, grid, w.values(),
                                                engine, rng);
      return condition_on_observation(
          model, alpha, grid, w.values(), posterior,
          [&](const WienerPath& base, double mk) {
            return density_exponent_field(model, alpha, base, mk);
          });
    }
    const double mv = m.value_or(model.prior().mean());
    const auto base = reconstruct_base(model, alpha, grid, w.values(), mv);
    return density_exponent_field(model, alpha, base, mv);
  };

  std::vector<DensityEstimate> out(lambdas.size());
  double log_l = 0.0;
  double prev_c = exponent_at(lambdas[0]);
  out[0] = {lambdas[0], 0.0, DensityEstimatorTag::kRepresentation};
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    const double c = exponent_at(lambdas[i]);
    log_l += 0.5 * (prev_c + c) * (lambdas[i] - lambdas[i - 1]);
    out[i] = {lambdas[i], log_l, DensityEstimatorTag::kRepresentation};
    prev_c = c;
  }
  return out;
}

std::optional<double> closed_form_log_density(
    const DriftModel& model, double lambda, const TimeGrid& grid,
    std::span<const double> obs_values) {
  const int n = grid.n_steps;
  if (static_cast<int>(obs_values.size()) != n + 1)
    throw std::invalid_argument("closed_form_log_density: bad obs length");
  const double g = model.parametrization().g(lambda);
  switch (model.kind()) {
    case DriftKind::kDeterministic: {
      // Cameron-Martin: log L(w) = g <h, w> - g^2 ||h||^2 / 2.
      double stoch = 0.0, norm = 0.0;
      for (int i = 0; i < n; ++i) {
        const double hd = model.det_density(grid.node(i));
        stoch += hd * (obs_values[i + 1] - obs_values[i]);
        norm += hd * hd * grid.dt;
      }
      return g * stoch - 0.5 * g * g * norm;
    }
    case DriftKind::kMarkov: {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = g * model.nonlinearity().f(obs_values[i]);
        acc += d * (obs_values[i + 1] - obs_values[i]) - 0.5 * d * d * grid.dt;
      }
      return acc;
    }
    case DriftKind::kGaussChannel: {
      if (model.prior().kind != ParameterLaw::Kind::kGaussian) return std::nullopt;
      const double snr = g * g * model.prior().sigma2;
      const double w1 = obs_values[n];
      return -0.5 * std::log1p(snr) + 0.5 * snr * w1 * w1 / (1.0 + snr);
    }
    case DriftKind::kPathFunctional:
      return std::nullopt;
  }
  return std::nullopt;
}

ConjugateIdentityStats conjugate_identity_check(const DriftModel& model,
                                                double lambda,
                                                const TimeGrid& grid,
                                                int n_paths,
                                                const EngineSpec& engine,
                                                std::uint64_t seed) {
  if (!model.observation_form())
    throw UnsupportedModelError("conjugate_identity_check: raw drift");
  ConjugateIdentityStats stats;
  stats.n_paths = n_paths;
  for (int p = 0; p < n_paths; ++p) {
    RngStream rng_w(seed, path_stream_id(p, StreamPurpose::kWiener));
    RngStream rng_m(seed, path_stream_id(p, StreamPurpose::kParameter));
    RngStream rng_f(seed, path_stream_id(p, StreamPurpose::kParticles));
    const auto w = sample_wiener(grid, rng_w);
    const double m = model.sample_parameter(rng_m);
    const auto realized = build_u(model, lambda, w, m);
    const auto filter = filter_with_engine(model, lambda, grid,
                                           realized.obs_values, engine, rng_f);
    const auto rh = conditional_rho_hat(grid, realized.obs_values, filter);
    const auto closed =
        closed_form_log_density(model, lambda, grid, realized.obs_values);
    const double log_l = closed.value_or(filter.log_marginal);
    const double product = std::exp(log_l + rh.log_value);
    const double residual = std::fabs(product - 1.0);
    stats.mean_abs_residual += residual;
    stats.mean_rho_times_l += product;
    stats.max_abs_residual = std::max(stats.max_abs_residual, residual);
  }
  if (n_paths > 0) {
    stats.mean_abs_residual /= n_paths;
    stats.mean_rho_times_l /= n_paths;
  }
  return stats;
}

}  // namespace wlab
