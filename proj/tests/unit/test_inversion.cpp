#include <doctest.h>

#include <cmath>
#include <vector>

#include "wlab/inversion.hpp"

using namespace wlab;

namespace {

WienerPath sample_path(const TimeGrid& grid, std::uint64_t stream) {
  RngStream rng(606, stream);
  return sample_wiener(grid, rng);
}

}  // namespace

TEST_CASE("zero drift inverts to the identity") {
  const TimeGrid grid(64);
  const auto w = sample_path(grid, 0);
  const auto zero = DriftModel::deterministic([](double) { return 0.0; });
  const auto report = invert_shift(zero, 1.0, w);
  CHECK(report.converged);
  CHECK(report.sup_u_of_v == 0.0);
  CHECK(report.sup_v_of_u == 0.0);
  for (int i = 0; i <= grid.n_steps; ++i)
    CHECK(report.v_values[i] == w.values()[i]);
}

TEST_CASE("deterministic drift: V = I - lambda h, roundtrip at rounding") {
  const TimeGrid grid(256);
  const auto w = sample_path(grid, 1);
  const auto det = DriftModel::deterministic([](double t) { return 1.0 + t; });
  const double lambda = 0.8;
  const auto report = invert_shift(det, lambda, w);
  CHECK(report.converged);
  CHECK(report.sup_u_of_v <= 1e-12);
  CHECK(report.sup_v_of_u <= 1e-12);
  double primitive = 0.0;
  for (int i = 0; i <= grid.n_steps; ++i) {
    CHECK(report.v_values[i] ==
          doctest::Approx(w.values()[i] - lambda * primitive).epsilon(1e-12));
    if (i < grid.n_steps) primitive += (1.0 + grid.node(i)) * grid.dt;
  }
}

TEST_CASE("markov drift: on-grid roundtrip is exact, both directions") {
  const TimeGrid grid(512);
  const auto w = sample_path(grid, 2);
  const auto markov = DriftModel::markov(tanh_map());
  const auto report = invert_shift(markov, 1.0, w);
  CHECK(report.converged);
  CHECK(report.sup_u_of_v <= 1e-10);
  CHECK(report.sup_v_of_u <= 1e-10);
}

TEST_CASE("per-parameter inversion of the channel") {
  const TimeGrid grid(128);
  const auto w = sample_path(grid, 3);
  const auto channel = DriftModel::gauss_channel(1.0);
  const auto report = invert_shift(channel, 1.0, w, 0.9);
  CHECK(report.converged);
  CHECK(report.sup_u_of_v <= 1e-12);
}

TEST_CASE("raw path functionals cannot be inverted through this route") {
  const TimeGrid grid(16);
  const auto raw = DriftModel::path_functional(identity_map());
  CHECK_THROWS_AS(invert_shift(raw, 1.0, sample_path(grid, 4)),
                  UnsupportedModelError);
}

TEST_CASE("refinement study: markov inverse converges with order >= 0.5") {
  const auto markov = DriftModel::markov(tanh_map());
  const auto report = inversion_refinement(markov, 1.0, {256, 1024, 4096},
                                           32768, 24, 707);
  CHECK(report.rms.size() == 3);
  // Finer grids reconstruct the fine-grid base path better.
  CHECK(report.rms[0] > report.rms[1]);
  CHECK(report.rms[1] > report.rms[2]);
  CHECK(report.order >= 0.5);
  CHECK(report.rms[2] <= 1e-2);
  // Coarse error within a factor-of-two envelope of the refined one after
  // rescaling by the observed order.
  const double scale =
      std::pow(4096.0 / 1024.0, report.order);
  CHECK(report.rms[1] <= 2.0 * report.rms[2] * scale);
}

TEST_CASE("refinement study validates grid divisibility") {
  const auto markov = DriftModel::markov(tanh_map());
  CHECK_THROWS_AS(inversion_refinement(markov, 1.0, {300}, 1024, 4, 1),
                  std::invalid_argument);
}

TEST_CASE("homotopy verdict: positive for markov, negative for the channel") {
  std::vector<double> lambdas = {0.25, 0.5, 0.75, 1.0};

  ScenarioContext markov_ctx{DriftModel::markov(tanh_map()), TimeGrid(128),
                             EngineSpec{EngineType::kQuadrature, 4}, 512, 808,
                             true};
  const auto markov_report = homotopy_invertibility(markov_ctx, lambdas);
  CHECK(markov_report.verdict);
  for (const auto& row : markov_report.rows) {
    CHECK(std::fabs(row.gap) <= 3.0 * row.gap_se + 1e-10);
    CHECK(std::isfinite(row.integrand_mean));
    CHECK(row.integrand_max < 1e6);
  }

  ScenarioContext channel_ctx{DriftModel::gauss_channel(1.0), TimeGrid(256),
                              EngineSpec{EngineType::kQuadrature, 64}, 2048,
                              808, true};
  const auto channel_report = homotopy_invertibility(channel_ctx, lambdas);
  CHECK_FALSE(channel_report.verdict);
  for (const auto& row : channel_report.rows) {
    const double closed = 0.5 * std::log1p(row.lambda * row.lambda);
    CHECK(std::fabs(row.gap - closed) <=
          std::max(3.0 * row.gap_se, 0.05 * closed));
  }

  ScenarioContext quad_ctx{
      DriftModel::markov(tanh_map(),
                         {LambdaParametrization::Kind::kQuadratic}),
      TimeGrid(32), EngineSpec{EngineType::kQuadrature, 4}, 32, 808, true};
  CHECK_THROWS_AS(homotopy_invertibility(quad_ctx, lambdas),
                  std::invalid_argument);
}

TEST_CASE("filter-mean reconstruction of the channel leaves a residual") {
  // Without knowledge of m the only adapted candidate inverse is the
  // innovation path; it stays away from the true base path no matter the
  // grid, which is the numerical face of non-invertibility.
  const auto channel = DriftModel::gauss_channel(1.0);
  ScenarioContext ctx{channel, TimeGrid(512),
                      EngineSpec{EngineType::kQuadrature, 64}, 64, 909, false};
  double rms = 0.0;
  long count = 0;
  for (int p = 0; p < ctx.n_paths; ++p) {
    RngStream rng_w(ctx.seed, path_stream_id(p, StreamPurpose::kWiener));
    RngStream rng_m(ctx.seed, path_stream_id(p, StreamPurpose::kParameter));
    const auto w = sample_wiener(ctx.grid, rng_w);
    const double m = channel.sample_parameter(rng_m);
    const auto realized = build_u(channel, 1.0, w, m);
    const auto filter = quadrature_filter(channel, 1.0, ctx.grid,
                                          realized.obs_values, 64);
    const auto z = innovation(ctx.grid, realized.obs_values, filter);
    for (int i = 0; i <= ctx.grid.n_steps; ++i) {
      const double d = z.values[i] - w.values()[i];
      rms += d * d;
      ++count;
    }
  }
  CHECK(std::sqrt(rms / count) > 0.05);
}
