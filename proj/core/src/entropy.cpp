#include "wlab/entropy.hpp"

#include <cmath>
#include <stdexcept>

#include "wlab/constants.hpp"
#include "wlab/girsanov.hpp"

namespace wlab {

namespace {

// Fixed-size path blocks processed independently; block boundaries (and all
// per-block partial sums) are independent of the thread count, which is
// what makes report files bit-identical under any --threads value.
template <class Work>
void for_each_block(int n_items, Work&& work) {
  const int block = constants::kJackknifeBlock;
  const int n_blocks = (n_items + block - 1) / block;
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < n_blocks; ++b) {
    const int lo = b * block;
    const int hi = std::min(n_items, lo + block);
    work(b, lo, hi);
  }
}

WienerPath sample_base_path(const ScenarioContext& ctx, int path_index,
                            double* m_out) {
  const int base = ctx.antithetic ? path_index / 2 : path_index;
  const double sign = (ctx.antithetic && (path_index & 1)) ? -1.0 : 1.0;
  RngStream rng_w(ctx.seed, path_stream_id(base, StreamPurpose::kWiener));
  RngStream rng_m(ctx.seed, path_stream_id(base, StreamPurpose::kParameter));
  auto w = sample_wiener(ctx.grid, rng_w);
  if (sign < 0.0) {
    std::vector<double> inc = w.increments();
    for (double& x : inc) x = -x;
    w = WienerPath(ctx.grid, std::move(inc));
  }
  *m_out = ctx.model.sample_parameter(rng_m);
  return w;
}

std::vector<double> extract_collect(const std::vector<PathRecord>& records,
                                    double PathRecord::* field) {
  std::vector<double> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].*field;
  return out;
}

MeanSe jack(const std::vector<PathRecord>& records,
            double PathRecord::* field) {
  return jackknife_mean_se(extract_collect(records, field));
}

}  // namespace

BatchResult simulate_paths(const ScenarioContext& ctx, double lambda,
                           const PathOptions& options, bool keep_step_sums) {
  const TimeGrid& grid = ctx.grid;
  const int n = grid.n_steps;
  const int block = constants::kJackknifeBlock;
  const int n_blocks = (ctx.n_paths + block - 1) / block;

  BatchResult result;
  result.records.resize(ctx.n_paths);
  std::vector<std::vector<double>> fsq(keep_step_sums ? n_blocks : 0);
  std::vector<std::vector<double>> ssq(keep_step_sums ? n_blocks : 0);

  const EngineSpec smoother_engine{
      ctx.engine.type,
      ctx.smoother_size > 0 ? ctx.smoother_size : ctx.engine.size};

  for_each_block(ctx.n_paths, [&](int b, int lo, int hi) {
    if (keep_step_sums) {
      fsq[b].assign(n, 0.0);
      ssq[b].assign(n, 0.0);
    }
    for (int p = lo; p < hi; ++p) {
      PathRecord rec;
      const auto w = sample_base_path(ctx, p, &rec.m);
      const auto realized = build_u(ctx.model, lambda, w, rec.m);
      const auto& obs = realized.obs_values;
      const auto& udot = realized.u.density();
      rec.base_terminal = w.terminal();
      rec.obs_terminal = obs.back();
      rec.drift_energy = cm_norm_sq(realized.u);
      rec.log_rho = rho(realized.u, w).log_value;

      if (options.filtering) {
        RngStream rng_f(ctx.seed, path_stream_id(p, StreamPurpose::kParticles));
        const auto filter = filter_with_engine(ctx.model, lambda, grid, obs,
                                               ctx.engine, rng_f);
        const auto rh = conditional_rho_hat(grid, obs, filter);
        rec.minus_log_rho_hat = -rh.log_value;
        rec.log_marginal = filter.log_marginal;
        rec.min_ess = filter.min_ess;
        rec.collapsed = filter.collapsed;
        double fe = 0.0, dm = 0.0, sm = 0.0;
        for (int i = 0; i < n; ++i) {
          const double f = filter.filtered[i];
          fe += f * f * grid.dt;
          const double e = udot[i] - f;
          dm += e * e * grid.dt;
          if (!filter.post_mean_m.empty()) {
            const double es = rec.m - filter.post_mean_m[i];
            sm += es * es * grid.dt;
          }
          if (keep_step_sums) fsq[b][i] += f * f;
        }
        rec.filtered_energy = fe;
        rec.drift_mmse = dm;
        rec.signal_mmse = filter.post_mean_m.empty() ? 0.0 : sm;
        rec.terminal_var_m = filter.terminal_var_m;
      }

      if (options.smoothing) {
        RngStream rng_s(ctx.seed, path_stream_id(p, StreamPurpose::kResample));
        const auto posterior = terminal_posterior(ctx.model, lambda, grid, obs,
                                                  smoother_engine, rng_s);
        const auto& pm = posterior.ensemble.m;
        const auto& pw = posterior.ensemble.weights;
        const double g = ctx.model.parametrization().g(lambda);
        double se_acc = 0.0, nce_acc = 0.0;
        for (int i = 0; i < n; ++i) {
          std::span<const double> hist(obs.data(), i + 1);
          double s = 0.0;
          for (std::size_t j = 0; j < pm.size(); ++j)
            s += pw[j] * g * ctx.model.unit_drift(grid, i, hist, pm[j]);
          se_acc += s * s * grid.dt;
          const double e = udot[i] - s;
          nce_acc += e * e * grid.dt;
          if (keep_step_sums) ssq[b][i] += s * s;
        }
        rec.smoothed_energy = se_acc;
        rec.drift_nce = nce_acc;
        if (ctx.model.uses_parameter()) {
          double mean = 0.0;
          for (std::size_t j = 0; j < pm.size(); ++j) mean += pw[j] * pm[j];
          const double e = rec.m - mean;
          rec.signal_nce = e * e;
        }
      }

      if (options.first_order || options.second_order) {
        rec.delta_ku = density_exponent_field(ctx.model, lambda, w, rec.m);
        RngStream rng_c(ctx.seed, path_stream_id(p, StreamPurpose::kResample));
        const auto posterior = terminal_posterior(ctx.model, lambda, grid, obs,
                                                  ctx.engine, rng_c);
        rec.cond_delta_ku = condition_on_observation(
            ctx.model, lambda, grid, obs, posterior,
            [&](const WienerPath& base, double mk) {
              return density_exponent_field(ctx.model, lambda, base, mk);
            });
        if (options.second_order)
          rec.cond_delta_dd = condition_on_observation(
              ctx.model, lambda, grid, obs, posterior,
              [&](const WienerPath& base, double mk) {
                return second_variation(ctx.model, lambda, base, mk).divergence;
              });
      }

      result.records[p] = rec;
    }
  });

  for (const auto& rec : result.records)
    result.any_collapsed = result.any_collapsed || rec.collapsed;

  if (keep_step_sums) {
    result.filtered_sq_sum.assign(n, 0.0);
    result.smoothed_sq_sum.assign(n, 0.0);
    for (int b = 0; b < n_blocks; ++b)
      for (int i = 0; i < n; ++i) {
        result.filtered_sq_sum[i] += fsq[b][i];
        result.smoothed_sq_sum[i] += ssq[b][i];
      }
  }
  return result;
}

EntropyReport entropy(const ScenarioContext& ctx, double lambda) {
  const auto batch = simulate_paths(ctx, lambda, PathOptions{});
  EntropyReport report;
  report.lambda = lambda;
  report.n_paths = ctx.n_paths;
  report.collapsed = batch.any_collapsed;

  std::vector<double> direct(batch.records.size());
  std::vector<double> via_rho(batch.records.size());
  std::vector<double> diff(batch.records.size());
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    direct[i] = 0.5 * batch.records[i].filtered_energy;
    via_rho[i] = batch.records[i].minus_log_rho_hat;
    diff[i] = direct[i] - via_rho[i];
  }
  report.theta_direct = jackknife_mean_se(direct);
  report.theta_rho = jackknife_mean_se(via_rho);
  const auto d = jackknife_mean_se(diff);
  report.diff_mean = d.mean;
  report.diff_se = d.se;
  return report;
}

MmseReport causal_mmse(const ScenarioContext& ctx, double lambda) {
  const auto batch = simulate_paths(ctx, lambda, PathOptions{});
  MmseReport report;
  report.lambda = lambda;
  report.drift_mmse = jack(batch.records, &PathRecord::drift_mmse);
  report.has_signal = ctx.model.uses_parameter();
  if (report.has_signal)
    report.signal_mmse = jack(batch.records, &PathRecord::signal_mmse);
  return report;
}

NceReport noncausal_error(const ScenarioContext& ctx, double lambda) {
  PathOptions options;
  options.smoothing = true;
  const auto batch = simulate_paths(ctx, lambda, options, true);
  NceReport report;
  report.lambda = lambda;
  report.drift_nce = jack(batch.records, &PathRecord::drift_nce);
  report.beta_integral = jack(batch.records, &PathRecord::smoothed_energy);
  report.has_signal = ctx.model.uses_parameter();
  if (report.has_signal)
    report.signal_nce = jack(batch.records, &PathRecord::signal_nce);
  report.beta.resize(ctx.grid.n_steps);
  for (int i = 0; i < ctx.grid.n_steps; ++i)
    report.beta[i] = batch.smoothed_sq_sum[i] / ctx.n_paths;
  return report;
}

namespace {

// theta(lambda +- h) along the same noise, reduced to the direct (filtered
// energy) estimator; per-path stencil values feed the jackknife.
std::vector<double> theta_direct_per_path(const ScenarioContext& ctx,
                                          double lambda) {
  const auto batch = simulate_paths(ctx, lambda, PathOptions{});
  std::vector<double> out(batch.records.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * batch.records[i].filtered_energy;
  return out;
}

DerivativeReport finish_first_order(const ScenarioContext& ctx, double lambda,
                                    std::vector<double> formula_per_path) {
  DerivativeReport report;
  report.lambda = lambda;
  report.formula = jackknife_mean_se(formula_per_path);

  const double h = constants::kEntropyFdFirstStep;
  std::vector<double> fd(formula_per_path.size());
  if (lambda >= h) {
    const auto up = theta_direct_per_path(ctx, lambda + h);
    const auto dn = theta_direct_per_path(ctx, lambda - h);
    for (std::size_t i = 0; i < fd.size(); ++i)
      fd[i] = (up[i] - dn[i]) / (2.0 * h);
  } else {
    const auto up = theta_direct_per_path(ctx, lambda + h);
    const auto at = theta_direct_per_path(ctx, lambda);
    for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (up[i] - at[i]) / h;
  }
  const auto f = jackknife_mean_se(fd);
  report.finite_difference = f.mean;
  report.fd_se = f.se;
  report.rel_gap = std::fabs(report.formula.mean - f.mean) /
                   std::max(std::fabs(f.mean), 1e-12);
  return report;
}

DerivativeReport finish_second_order(const ScenarioContext& ctx, double lambda,
                                     std::vector<double> formula_per_path,
                                     const std::vector<PathRecord>& at_lambda) {
  DerivativeReport report;
  report.lambda = lambda;
  report.formula = jackknife_mean_se(formula_per_path);

  const double h = constants::kEntropyFdSecondStep;
  const auto up = theta_direct_per_path(ctx, lambda + h);
  const auto dn = theta_direct_per_path(ctx, std::max(0.0, lambda - h));
  std::vector<double> fd(formula_per_path.size());
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double mid = 0.5 * at_lambda[i].filtered_energy;
    fd[i] = (up[i] - 2.0 * mid + dn[i]) / (h * h);
  }
  const auto f = jackknife_mean_se(fd);
  report.finite_difference = f.mean;
  report.fd_se = f.se;
  report.rel_gap = std::fabs(report.formula.mean - f.mean) /
                   std::max(std::fabs(f.mean), 1e-12);
  return report;
}

}  // namespace

DerivativeReport entropy_derivative(const ScenarioContext& ctx, double lambda) {
  PathOptions options;
  options.first_order = true;
  const auto batch = simulate_paths(ctx, lambda, options);
  std::vector<double> formula(batch.records.size());
  for (std::size_t i = 0; i < formula.size(); ++i)
    formula[i] =
        batch.records[i].delta_ku * batch.records[i].minus_log_rho_hat;
  return finish_first_order(ctx, lambda, std::move(formula));
}

DerivativeReport entropy_second_derivative(const ScenarioContext& ctx,
                                           double lambda) {
  PathOptions options;
  options.first_order = true;
  options.second_order = true;
  const auto batch = simulate_paths(ctx, lambda, options);
  std::vector<double> formula(batch.records.size());
  for (std::size_t i = 0; i < formula.size(); ++i) {
    const auto& r = batch.records[i];
    formula[i] = r.cond_delta_dd * r.minus_log_rho_hat +
                 r.cond_delta_ku * r.cond_delta_ku;
  }
  return finish_second_order(ctx, lambda, std::move(formula), batch.records);
}

TauDerivativeReport tau_derivatives(const ScenarioContext& ctx,
                                    double lambda) {
  PathOptions options;
  options.first_order = true;
  options.second_order = true;
  const auto batch = simulate_paths(ctx, lambda, options);

  std::vector<double> first(batch.records.size());
  std::vector<double> second(batch.records.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto& r = batch.records[i];
    first[i] = r.cond_delta_ku * r.minus_log_rho_hat;
    second[i] = r.cond_delta_dd * r.minus_log_rho_hat +
                r.cond_delta_ku * r.cond_delta_ku;
  }
  TauDerivativeReport report;
  report.lambda = lambda;
  report.first = finish_first_order(ctx, lambda, std::move(first));
  report.second = finish_second_order(ctx, lambda, std::move(second),
                                      batch.records);
  return report;
}

InfoReport mutual_information(const ScenarioContext& ctx, double lambda) {
  const auto batch = simulate_paths(ctx, lambda, PathOptions{});
  InfoReport report;
  report.lambda = lambda;
  report.n_paths = ctx.n_paths;

  // Conditioning with m revealed makes the drift observable for every
  // observation-form kind, so the first filtered energy is the drift energy
  // itself; the second uses the m-blind filter.
  std::vector<double> mi(batch.records.size());
  std::vector<double> decomposition(batch.records.size());
  for (std::size_t i = 0; i < mi.size(); ++i) {
    const auto& r = batch.records[i];
    mi[i] = 0.5 * (r.drift_energy - r.filtered_energy);
    decomposition[i] = r.minus_log_rho_hat - 0.5 * r.filtered_energy;
  }
  report.mutual_information = jackknife_mean_se(mi);
  std::vector<double> joint(batch.records.size());
  std::vector<double> tau_d(batch.records.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    joint[i] = 0.5 * batch.records[i].drift_energy;
    tau_d[i] = 0.5 * batch.records[i].filtered_energy;
  }
  report.theta_joint = jackknife_mean_se(joint);
  report.tau_direct = jackknife_mean_se(tau_d);
  report.tau_rho = jack(batch.records, &PathRecord::minus_log_rho_hat);
  const auto dec = jackknife_mean_se(decomposition);
  report.decomposition_gap = dec.mean;
  report.decomposition_se = dec.se;
  return report;
}

MeanSe invertibility_gap(const ScenarioContext& ctx, double lambda) {
  const auto batch = simulate_paths(ctx, lambda, PathOptions{});
  std::vector<double> gap(batch.records.size());
  for (std::size_t i = 0; i < gap.size(); ++i)
    gap[i] = 0.5 * (batch.records[i].drift_energy -
                    batch.records[i].filtered_energy);
  return jackknife_mean_se(gap);
}

std::vector<SweepRow> immse_sweep(const ScenarioContext& ctx,
                                  const std::vector<double>& lambdas,
                                  bool with_nce) {
  if (!ctx.model.uses_parameter())
    throw UnsupportedModelError(
        "immse_sweep: needs a channel model with a signal parameter");
  std::vector<SweepRow> rows(lambdas.size());
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    PathOptions options;
    options.smoothing = with_nce;
    const auto batch = simulate_paths(ctx, lambdas[k], options);
    SweepRow row;
    row.lambda = lambdas[k];
    std::vector<double> mi(batch.records.size());
    for (std::size_t i = 0; i < mi.size(); ++i)
      mi[i] = 0.5 * (batch.records[i].drift_energy -
                     batch.records[i].filtered_energy);
    row.mutual_information = jackknife_mean_se(mi);
    row.drift_mmse = jack(batch.records, &PathRecord::drift_mmse);
    row.signal_mmse = jack(batch.records, &PathRecord::signal_mmse);
    if (with_nce) row.drift_nce = jack(batch.records, &PathRecord::drift_nce);
    rows[k] = row;
  }
  for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
    const double span = lambdas[k + 1] - lambdas[k - 1];
    if (span > 0.0) {
      rows[k].dmi_fd = (rows[k + 1].mutual_information.mean -
                        rows[k - 1].mutual_information.mean) /
                       span;
      rows[k].has_dmi_fd = true;
    }
  }
  return rows;
}

ContinuityReport lambda_continuity_sweep(const ScenarioContext& ctx,
                                         const std::vector<double>& lambdas) {
  ContinuityReport report;
  report.lambdas = lambdas;
  if (lambdas.size() < 2) return report;
  report.jumps.resize(lambdas.size() - 1, 0.0);

  const int block = constants::kJackknifeBlock;
  const int n_blocks = (ctx.n_paths + block - 1) / block;
  for (std::size_t k = 0; k + 1 < lambdas.size(); ++k) {
    std::vector<double> partial(n_blocks, 0.0);
    for_each_block(ctx.n_paths, [&](int b, int lo, int hi) {
      double acc = 0.0;
      for (int p = lo; p < hi; ++p) {
        double m = 0.0;
        const auto w = sample_base_path(ctx, p, &m);
        double dist = 0.0;
        const auto lo_r = build_u(ctx.model, lambdas[k], w, m);
        const auto hi_r = build_u(ctx.model, lambdas[k + 1], w, m);
        RngStream rng_a(ctx.seed, path_stream_id(p, StreamPurpose::kParticles));
        RngStream rng_b(ctx.seed, path_stream_id(p, StreamPurpose::kParticles));
        const auto fa = filter_with_engine(ctx.model, lambdas[k], ctx.grid,
                                           lo_r.obs_values, ctx.engine, rng_a);
        const auto fb = filter_with_engine(ctx.model, lambdas[k + 1], ctx.grid,
                                           hi_r.obs_values, ctx.engine, rng_b);
        for (int i = 0; i < ctx.grid.n_steps; ++i) {
          const double d = fb.filtered[i] - fa.filtered[i];
          dist += d * d * ctx.grid.dt;
        }
        acc += dist;
      }
      partial[b] = acc;
    });
    double total = 0.0;
    for (double x : partial) total += x;
    report.jumps[k] = std::sqrt(total / ctx.n_paths);
  }
  for (double j : report.jumps) report.max_jump = std::max(report.max_jump, j);
  return report;
}

BetaProbe beta_probe(const ScenarioContext& ctx,
                     const std::vector<double>& lambdas) {
  if (lambdas.size() < 3)
    throw std::invalid_argument("beta_probe: need at least three lambdas");
  const double h = lambdas[1] - lambdas[0];
  for (std::size_t k = 1; k < lambdas.size(); ++k)
    if (std::fabs((lambdas[k] - lambdas[k - 1]) - h) > 1e-12 * std::max(1.0, h))
      throw std::invalid_argument("beta_probe: lambda grid must be uniform");

  BetaProbe probe;
  probe.lambdas = lambdas;
  probe.beta_integral.resize(lambdas.size());
  std::vector<std::vector<double>> per_path(lambdas.size());
  PathOptions options;
  options.smoothing = true;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const auto batch = simulate_paths(ctx, lambdas[k], options);
    per_path[k] = extract_collect(batch.records, &PathRecord::smoothed_energy);
    probe.beta_integral[k] = jackknife_mean_se(per_path[k]).mean;
  }
  std::vector<double> d2(per_path[0].size());
  for (std::size_t i = 0; i < d2.size(); ++i)
    d2[i] = (per_path[2][i] - 2.0 * per_path[1][i] + per_path[0][i]) / (h * h);
  const auto stat = jackknife_mean_se(d2);
  probe.second_difference_at_zero = stat.mean;
  probe.second_difference_se = stat.se;
  probe.convex_near_zero = stat.mean >= -3.0 * stat.se;
  return probe;
}

}  // namespace wlab
