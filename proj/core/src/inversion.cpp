#include "wlab/inversion.hpp"

#include <cmath>
#include <stdexcept>

#include "wlab/constants.hpp"
#include "wlab/girsanov.hpp"

namespace wlab {

namespace {

void require_invertible_form(const DriftModel& model, const char* who) {
  if (!model.observation_form())
    throw UnsupportedModelError(
        std::string(who) + ": drift must be evaluable on a candidate path "
                           "(observation-form or deterministic)");
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

}  // namespace

InverseSolveReport invert_shift(const DriftModel& model, double lambda,
                                const WienerPath& w, double m) {
  require_invertible_form(model, "invert_shift");
  const TimeGrid& grid = w.grid();
  const int n = grid.n_steps;

  InverseSolveReport report;
  // The observation process of the candidate V reproduces the driving path
  // on the grid, so the drift is evaluated along w itself.
  const auto v = reconstruct_base(model, lambda, grid, w.values(), m);
  report.v_values = v.values();
  for (double x : report.v_values)
    if (!std::isfinite(x) || std::fabs(x) > constants::kInverseSolveDivergence) {
      report.converged = false;
      return report;
    }

  const auto u_of_v = build_u(model, lambda, v, m);
  report.sup_u_of_v = sup_diff(u_of_v.obs_values, w.values());

  const auto forward = build_u(model, lambda, w, m);
  const auto v_of_u =
      reconstruct_base(model, lambda, grid, forward.obs_values, m);
  report.sup_v_of_u = sup_diff(v_of_u.values(), w.values());

  report.converged = true;
  return report;
}

RefinementReport inversion_refinement(const DriftModel& model, double lambda,
                                      const std::vector<int>& n_values,
                                      int n_reference, int n_paths,
                                      std::uint64_t seed, double m) {
  require_invertible_form(model, "inversion_refinement");
  for (int n : n_values)
    if (n < 1 || n_reference % n != 0)
      throw std::invalid_argument(
          "inversion_refinement: coarse grids must divide the reference grid");

  RefinementReport report;
  report.n_values = n_values;
  report.rms.assign(n_values.size(), 0.0);

  const TimeGrid fine(n_reference);
  std::vector<double> sq_sums(n_values.size(), 0.0);
  for (int p = 0; p < n_paths; ++p) {
    RngStream rng_w(seed, path_stream_id(p, StreamPurpose::kWiener));
    const auto w_fine = sample_wiener(fine, rng_w);
    const auto forward = build_u(model, lambda, w_fine, m);

    for (std::size_t k = 0; k < n_values.size(); ++k) {
      const int n = n_values[k];
      const int stride = n_reference / n;
      const TimeGrid coarse(n);
      std::vector<double> obs(n + 1);
      for (int i = 0; i <= n; ++i) obs[i] = forward.obs_values[i * stride];
      const auto v = reconstruct_base(model, lambda, coarse, obs, m);
      double acc = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double d = v.values()[i] - w_fine.values()[i * stride];
        acc += d * d;
      }
      sq_sums[k] += acc / (n + 1);
    }
  }
  for (std::size_t k = 0; k < n_values.size(); ++k)
    report.rms[k] = std::sqrt(sq_sums[k] / n_paths);

  // Mean convergence order from consecutive grid pairs.
  double order_acc = 0.0;
  int order_count = 0;
  for (std::size_t k = 0; k + 1 < n_values.size(); ++k) {
    const double ratio = report.rms[k] / report.rms[k + 1];
    const double refine =
        static_cast<double>(n_values[k + 1]) / n_values[k];
    if (ratio > 0.0 && refine > 1.0) {
      order_acc += std::log(ratio) / std::log(refine);
      ++order_count;
    }
  }
  report.order = order_count > 0 ? order_acc / order_count : 0.0;
  return report;
}

HomotopyReport homotopy_invertibility(const ScenarioContext& ctx,
                                      const std::vector<double>& lambdas) {
  if (ctx.model.parametrization().kind != LambdaParametrization::Kind::kLinear)
    throw std::invalid_argument(
        "homotopy_invertibility: linear parametrization required");

  HomotopyReport report;
  report.rows.reserve(lambdas.size());
  bool verdict = true;
  for (double lambda : lambdas) {
    PathOptions options;
    options.first_order = true;
    const auto batch = simulate_paths(ctx, lambda, options);

    std::vector<double> gap(batch.records.size());
    std::vector<double> integrand(batch.records.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < gap.size(); ++i) {
      const auto& r = batch.records[i];
      gap[i] = 0.5 * (r.drift_energy - r.filtered_energy);
      integrand[i] = std::exp(r.log_rho) * std::fabs(r.cond_delta_ku);
      worst = std::max(worst, integrand[i]);
    }
    HomotopyRow row;
    row.lambda = lambda;
    const auto g = jackknife_mean_se(gap);
    row.gap = g.mean;
    row.gap_se = g.se;
    const auto s = jackknife_mean_se(integrand);
    row.integrand_mean = s.mean;
    row.integrand_se = s.se;
    row.integrand_max = worst;
    report.rows.push_back(row);
    if (std::fabs(row.gap) > 3.0 * row.gap_se) verdict = false;
  }
  report.verdict = verdict;
  return report;
}

}  // namespace wlab
