#include <doctest.h>

#include <cmath>
#include <vector>

#include "wlab/filter.hpp"
#include "wlab/girsanov.hpp"
#include "wlab/oracles.hpp"
#include "wlab/stats.hpp"

using namespace wlab;

namespace {

struct Sampled {
  WienerPath w;
  double m;
  ShiftRealization realized;
};

Sampled sample_obs(const DriftModel& model, double lambda, const TimeGrid& grid,
                   std::uint64_t seed, int p) {
  RngStream rng_w(seed, path_stream_id(p, StreamPurpose::kWiener));
  RngStream rng_m(seed, path_stream_id(p, StreamPurpose::kParameter));
  auto w = sample_wiener(grid, rng_w);
  const double m = model.sample_parameter(rng_m);
  auto realized = build_u(model, lambda, w, m);
  return {std::move(w), m, std::move(realized)};
}

}  // namespace

TEST_CASE("raw drifts are rejected with a typed error") {
  const TimeGrid grid(16);
  const auto raw = DriftModel::path_functional(identity_map());
  std::vector<double> obs(grid.n_steps + 1, 0.0);
  CHECK_THROWS_AS(quadrature_filter(raw, 1.0, grid, obs, 8),
                  UnsupportedModelError);
  CHECK_THROWS_AS(run_filter(raw, 1.0, grid, obs, 8, RngStream(1, 1)),
                  UnsupportedModelError);
  CHECK_THROWS_AS(smoother(raw, 1.0, grid, obs, EngineSpec{}, RngStream(1, 1)),
                  UnsupportedModelError);
}

TEST_CASE("lambda = 0: filtered drift is the prior mean") {
  const TimeGrid grid(64);
  const auto channel = DriftModel::gauss_channel(1.0);
  const auto s = sample_obs(channel, 0.0, grid, 21, 0);
  const auto filter =
      quadrature_filter(channel, 0.0, grid, s.realized.obs_values, 32);
  for (double f : filter.filtered) CHECK(f == doctest::Approx(0.0));
  for (double pm : filter.post_mean_m)
    CHECK(pm == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("gauss channel: quadrature filter matches the conjugate filter") {
  const TimeGrid grid(256);
  const auto channel = DriftModel::gauss_channel(1.0);
  const double lambda = 1.0;
  for (int p = 0; p < 5; ++p) {
    const auto s = sample_obs(channel, lambda, grid, 22, p);
    const auto filter =
        quadrature_filter(channel, lambda, grid, s.realized.obs_values, 64);
    for (int i = 0; i < grid.n_steps; ++i) {
      const double closed = oracle::channel_filtered_drift(
          channel, lambda, grid.node(i), s.realized.obs_values[i]);
      CHECK(std::fabs(filter.filtered[i] - closed) < 1e-6);
    }
    // Mixture marginal equals the closed-form density at the observation.
    const double closed_marginal = -0.5 * std::log1p(1.0) +
                                   0.5 * s.realized.obs_values.back() *
                                       s.realized.obs_values.back() / 2.0;
    CHECK(filter.log_marginal ==
          doctest::Approx(closed_marginal).epsilon(1e-6));
  }
}

TEST_CASE("markov drift is observable: filtered equals drift exactly") {
  const TimeGrid grid(128);
  const auto markov = DriftModel::markov(tanh_map());
  const auto s = sample_obs(markov, 1.0, grid, 23, 0);
  const auto filter =
      quadrature_filter(markov, 1.0, grid, s.realized.obs_values, 8);
  for (int i = 0; i < grid.n_steps; ++i)
    CHECK(filter.filtered[i] ==
          doctest::Approx(s.realized.u.density()[i]).epsilon(1e-12));
}

TEST_CASE("particle filter tracks the closed form (RMS oracle)") {
  const TimeGrid grid(1024);
  const auto channel = DriftModel::gauss_channel(1.0);
  const double lambda = 1.0;
  const int n_particles = 512;
  const int n_paths = 100;
  double sq = 0.0;
  long count = 0;
  for (int p = 0; p < n_paths; ++p) {
    const auto s = sample_obs(channel, lambda, grid, 24, p);
    RngStream rng_f(24, path_stream_id(p, StreamPurpose::kParticles));
    const auto filter = run_filter(channel, lambda, grid,
                                   s.realized.obs_values, n_particles, rng_f);
    CHECK_FALSE(filter.collapsed);
    for (int i = 0; i < grid.n_steps; ++i) {
      const double closed = oracle::channel_filtered_drift(
          channel, lambda, grid.node(i), s.realized.obs_values[i]);
      const double e = filter.filtered[i] - closed;
      sq += e * e;
      ++count;
    }
  }
  CHECK(std::sqrt(sq / count) <= 0.05);
}

TEST_CASE("particle vs quadrature agreement is within 3/sqrt(N)") {
  const TimeGrid grid(512);
  const auto channel = DriftModel::gauss_channel(1.0);
  const double lambda = 1.0;
  const int n_particles = 1024;
  for (int p = 0; p < 20; ++p) {
    const auto s = sample_obs(channel, lambda, grid, 25, p);
    RngStream rng_f(25, path_stream_id(p, StreamPurpose::kParticles));
    const auto particle = run_filter(channel, lambda, grid,
                                     s.realized.obs_values, n_particles, rng_f);
    const auto quad =
        quadrature_filter(channel, lambda, grid, s.realized.obs_values, 128);
    double worst = 0.0;
    for (int i = 0; i < grid.n_steps; ++i)
      worst = std::max(worst,
                       std::fabs(particle.filtered[i] - quad.filtered[i]));
    CHECK(worst <= 3.0 / std::sqrt(static_cast<double>(n_particles)));
  }
}

TEST_CASE("filtered drift is predictable in the observation") {
  const TimeGrid grid(64);
  const auto channel = DriftModel::gauss_channel(1.0);
  const auto s = sample_obs(channel, 1.0, grid, 26, 0);
  auto obs = s.realized.obs_values;
  const auto full = quadrature_filter(channel, 1.0, grid, obs, 32);
  // Change the observation after node k; filtered values up to k must not
  // move (filtered[i] only reads data strictly before t_i, plus the node
  // value at t_i through the drift argument).
  const int k = 40;
  for (int i = k + 1; i <= grid.n_steps; ++i) obs[i] += 5.0 + 0.1 * i;
  const auto tampered = quadrature_filter(channel, 1.0, grid, obs, 32);
  for (int i = 0; i <= k; ++i)
    CHECK(tampered.filtered[i] == full.filtered[i]);
}

TEST_CASE("innovation of a deterministic drift is the base path") {
  const TimeGrid grid(128);
  const auto det = DriftModel::deterministic([](double t) { return 1.0 - t; });
  const auto s = sample_obs(det, 1.0, grid, 27, 0);
  const auto filter =
      quadrature_filter(det, 1.0, grid, s.realized.obs_values, 4);
  const auto z = innovation(grid, s.realized.obs_values, filter);
  for (int i = 0; i <= grid.n_steps; ++i)
    CHECK(z.values[i] == doctest::Approx(s.w.values()[i]).epsilon(1e-12));
}

TEST_CASE("innovation increments look Brownian for the channel") {
  const TimeGrid grid(1024);
  const auto channel = DriftModel::gauss_channel(1.0);
  const int n_paths = 200;
  std::vector<double> all;
  all.reserve(static_cast<std::size_t>(n_paths) * grid.n_steps);
  double lag = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    const auto s = sample_obs(channel, 1.0, grid, 28, p);
    const auto filter =
        quadrature_filter(channel, 1.0, grid, s.realized.obs_values, 64);
    const auto z = innovation(grid, s.realized.obs_values, filter);
    all.insert(all.end(), z.increments.begin(), z.increments.end());
    lag += lag1_autocorrelation(z.increments);
  }
  CHECK(sample_variance(all) / grid.dt == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::fabs(lag / n_paths) <= 0.05);
}

TEST_CASE("conditional rho hat: accounting identity and trivial cases") {
  const TimeGrid grid(256);
  const auto channel = DriftModel::gauss_channel(1.0);
  const auto s = sample_obs(channel, 1.0, grid, 29, 0);
  const auto filter =
      quadrature_filter(channel, 1.0, grid, s.realized.obs_values, 64);
  const auto rh = conditional_rho_hat(grid, s.realized.obs_values, filter);
  // The two accountings of the same weight (via dZ and via dU) are one
  // algebraic identity.
  CHECK(rh.accounting_gap <= 1e-6);

  // Zero drift: rho_hat = 1.
  const auto zero = DriftModel::deterministic([](double) { return 0.0; });
  const auto s0 = sample_obs(zero, 1.0, grid, 29, 1);
  const auto f0 = quadrature_filter(zero, 1.0, grid, s0.realized.obs_values, 4);
  CHECK(conditional_rho_hat(grid, s0.realized.obs_values, f0).log_value == 0.0);

  // Deterministic drift: rho_hat = rho exactly.
  const auto det = DriftModel::deterministic([](double t) { return t; });
  const auto s1 = sample_obs(det, 1.0, grid, 29, 2);
  const auto f1 = quadrature_filter(det, 1.0, grid, s1.realized.obs_values, 4);
  const auto rh1 = conditional_rho_hat(grid, s1.realized.obs_values, f1);
  const auto realized = build_u(det, 1.0, s1.w, 0.0);
  CHECK(rh1.log_value ==
        doctest::Approx(rho(realized.u, s1.w).log_value).epsilon(1e-10));
}

TEST_CASE("mixture gap of the channel is small but nonzero") {
  const TimeGrid grid(1024);
  const auto channel = DriftModel::gauss_channel(1.0);
  double acc = 0.0;
  const int n_paths = 64;
  for (int p = 0; p < n_paths; ++p) {
    const auto s = sample_obs(channel, 1.0, grid, 30, p);
    const auto filter =
        quadrature_filter(channel, 1.0, grid, s.realized.obs_values, 128);
    const auto rh = conditional_rho_hat(grid, s.realized.obs_values, filter);
    acc += std::fabs(std::expm1(rh.mixture_gap));
  }
  CHECK(acc / n_paths <= 2e-2);
}

TEST_CASE("smoother: conjugate gaussian oracle E[m | full path] = U(1)/2") {
  const TimeGrid grid(512);
  const auto channel = DriftModel::gauss_channel(1.0);
  const EngineSpec quad{EngineType::kQuadrature, 64};
  double sq = 0.0;
  long count = 0;
  for (int p = 0; p < 50; ++p) {
    const auto s = sample_obs(channel, 1.0, grid, 31, p);
    RngStream rng(31, path_stream_id(p, StreamPurpose::kResample));
    const auto smoothed =
        smoother(channel, 1.0, grid, s.realized.obs_values, quad, rng);
    const double target = s.realized.obs_values.back() / 2.0;
    for (double v : smoothed) {
      const double e = v - target;
      sq += e * e;
      ++count;
    }
  }
  CHECK(std::sqrt(sq / count) <= 1e-6);  // quadrature smoother is exact here

  // Particle smoother at N = 2048 within the Monte Carlo tolerance.
  const EngineSpec particle{EngineType::kParticle, 2048};
  sq = 0.0;
  count = 0;
  for (int p = 0; p < 30; ++p) {
    const auto s = sample_obs(channel, 1.0, grid, 32, p);
    RngStream rng(32, path_stream_id(p, StreamPurpose::kResample));
    const auto smoothed =
        smoother(channel, 1.0, grid, s.realized.obs_values, particle, rng);
    const double target = s.realized.obs_values.back() / 2.0;
    for (double v : smoothed) {
      const double e = v - target;
      sq += e * e;
      ++count;
    }
  }
  CHECK(std::sqrt(sq / count) <= 0.05);
}

TEST_CASE("smoothed equals filtered for observable drifts") {
  const TimeGrid grid(128);
  const auto markov = DriftModel::markov(tanh_map());
  const auto s = sample_obs(markov, 1.0, grid, 33, 0);
  RngStream rng(33, path_stream_id(0, StreamPurpose::kResample));
  const auto smoothed = smoother(markov, 1.0, grid, s.realized.obs_values,
                                 EngineSpec{EngineType::kQuadrature, 4}, rng);
  for (int i = 0; i < grid.n_steps; ++i)
    CHECK(smoothed[i] ==
          doctest::Approx(s.realized.u.density()[i]).epsilon(1e-12));
}

TEST_CASE("tower property of the filtered drift") {
  // E[(udot - filtered) g(innovation prefix)] = 0 for a bounded functional
  // of the observation history.
  const TimeGrid grid(128);
  const auto channel = DriftModel::gauss_channel(1.0);
  const int n_paths = 30000;
  std::vector<double> values(n_paths);
  const int i_test = 64;
  for (int p = 0; p < n_paths; ++p) {
    const auto s = sample_obs(channel, 1.0, grid, 34, p);
    const auto filter =
        quadrature_filter(channel, 1.0, grid, s.realized.obs_values, 32);
    const auto z = innovation(grid, s.realized.obs_values, filter);
    const double g = std::tanh(z.values[i_test]);  // bounded test functional
    values[p] = (s.realized.u.density()[i_test] - filter.filtered[i_test]) * g;
  }
  const auto stat = plain_mean_se(values);
  CHECK(std::fabs(stat.mean) <= 3.0 * stat.se);
}

TEST_CASE("jensen ordering: smoothing explains at least the filtered energy") {
  const TimeGrid grid(256);
  const auto channel = DriftModel::gauss_channel(1.0);
  const EngineSpec quad{EngineType::kQuadrature, 64};
  const int n_paths = 2000;
  std::vector<double> diff(n_paths);
  for (int p = 0; p < n_paths; ++p) {
    const auto s = sample_obs(channel, 1.0, grid, 35, p);
    const auto filter =
        quadrature_filter(channel, 1.0, grid, s.realized.obs_values, 64);
    RngStream rng(35, path_stream_id(p, StreamPurpose::kResample));
    const auto smoothed =
        smoother(channel, 1.0, grid, s.realized.obs_values, quad, rng);
    double fe = 0.0, se = 0.0;
    for (int i = 0; i < grid.n_steps; ++i) {
      fe += filter.filtered[i] * filter.filtered[i] * grid.dt;
      se += smoothed[i] * smoothed[i] * grid.dt;
    }
    diff[p] = se - fe;
  }
  const auto stat = plain_mean_se(diff);
  CHECK(stat.mean >= -3.0 * stat.se);
}

TEST_CASE("uniform prior channel: quadrature matches a brute-force grid") {
  const TimeGrid grid(64);
  const auto channel = DriftModel::channel(ParameterLaw::uniform(-1.0, 2.0));
  const auto s = sample_obs(channel, 1.0, grid, 36, 0);
  const auto filter =
      quadrature_filter(channel, 1.0, grid, s.realized.obs_values, 64);

  // Brute force: Riemann posterior over a fine m-grid using the same
  // predictable weighting.
  const int n_grid = 20000;
  const auto& obs = s.realized.obs_values;
  std::vector<double> logw(n_grid, 0.0), ms(n_grid);
  for (int k = 0; k < n_grid; ++k)
    ms[k] = -1.0 + 3.0 * (k + 0.5) / n_grid;
  for (int i = 0; i < grid.n_steps; ++i) {
    // Check a few steps only; the last checked index is n_steps - 1.
    if (i == 20 || i == 63) {
      double num = 0.0, den = 0.0;
      for (int k = 0; k < n_grid; ++k) {
        const double w = std::exp(logw[k]);
        num += w * ms[k];
        den += w;
      }
      CHECK(std::fabs(filter.filtered[i] - num / den) < 1e-6);
    }
    const double du = obs[i + 1] - obs[i];
    for (int k = 0; k < n_grid; ++k)
      logw[k] += ms[k] * du - 0.5 * ms[k] * ms[k] * grid.dt;
  }
}

TEST_CASE("particle collapse is flagged") {
  const TimeGrid grid(64);
  // A wildly informative observation with a tiny particle cloud starves the
  // ensemble: ESS dips below the floor before resampling can help.
  const auto channel = DriftModel::gauss_channel(25.0);
  std::vector<double> obs(grid.n_steps + 1);
  for (int i = 0; i <= grid.n_steps; ++i) obs[i] = 40.0 * grid.node(i);
  RngStream rng(37, 0);
  const auto filter = run_filter(channel, 1.0, grid, obs, 12, rng);
  CHECK(filter.min_ess < 12.0);
  CHECK(filter.collapsed);
}
