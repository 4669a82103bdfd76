#include <doctest.h>

#include <cmath>
#include <vector>

#include "wlab/model.hpp"

using namespace wlab;

namespace {

// Central difference of eval_drift in lambda at fixed history.
double lambda_fd(const DriftModel& model, double lambda, const TimeGrid& grid,
                 int step, std::span<const double> history, double m,
                 int order) {
  const double h = 1e-4;
  auto f = [&](double l) {
    return model.eval_drift(l, grid, step, history, m);
  };
  if (order == 1) return (f(lambda + h) - f(lambda - h)) / (2.0 * h);
  return (f(lambda + h) - 2.0 * f(lambda) + f(lambda - h)) / (h * h);
}

}  // namespace

TEST_CASE("eval_drift basics per kind") {
  const TimeGrid grid(16);
  const std::vector<double> history(grid.n_steps + 1, 0.5);

  const auto det = DriftModel::deterministic([](double) { return 1.0; });
  CHECK(det.eval_drift(2.0, grid, 3, history, 0.0) == doctest::Approx(2.0));

  const auto channel = DriftModel::gauss_channel(1.0);
  for (int i : {0, 5, 15})
    CHECK(channel.eval_drift(1.0, grid, i, history, 0.7) ==
          doctest::Approx(0.7));

  const auto markov = DriftModel::markov(tanh_map());
  CHECK(markov.eval_drift(1.0, grid, 4, history, 0.0) ==
        doctest::Approx(std::tanh(0.5)));
  CHECK(std::tanh(0.5) == doctest::Approx(0.462117).epsilon(1e-5));
}

TEST_CASE("insufficient history is rejected") {
  const TimeGrid grid(16);
  const auto markov = DriftModel::markov(tanh_map());
  const std::vector<double> short_history(3, 0.0);
  CHECK_THROWS_AS(markov.eval_drift(1.0, grid, 5, short_history, 0.0),
                  std::invalid_argument);
}

TEST_CASE("adaptedness: drift at step i ignores history after i") {
  const TimeGrid grid(32);
  const auto markov = DriftModel::markov(tanh_map());
  std::vector<double> a(grid.n_steps + 1, 0.0), b(grid.n_steps + 1, 0.0);
  for (int i = 0; i <= grid.n_steps; ++i) {
    a[i] = 0.1 * i;
    b[i] = i <= 7 ? 0.1 * i : -3.0;  // agree up to node 7, differ after
  }
  const int step = 7;
  const double da = markov.eval_drift(1.0, grid, step,
                                      std::span<const double>(a.data(), step + 1),
                                      0.0);
  const double db = markov.eval_drift(1.0, grid, step,
                                      std::span<const double>(b.data(), step + 1),
                                      0.0);
  CHECK(da == db);
}

TEST_CASE("lambda derivatives: analytic matches finite differences") {
  const TimeGrid grid(16);
  std::vector<double> history(grid.n_steps + 1);
  for (int i = 0; i <= grid.n_steps; ++i) history[i] = 0.3 * std::sin(1.0 + i);

  std::vector<DriftModel> zoo;
  zoo.push_back(DriftModel::deterministic([](double t) { return 1.0 + t; }));
  zoo.push_back(DriftModel::gauss_channel(1.0));
  zoo.push_back(DriftModel::markov(tanh_map()));
  zoo.push_back(DriftModel::path_functional(identity_map()));
  zoo.push_back(DriftModel::markov(
      tanh_map(), {LambdaParametrization::Kind::kQuadratic}));

  for (const auto& model : zoo) {
    for (double lambda : {0.0, 0.5, 1.0}) {
      for (int order : {1, 2}) {
        const double analytic =
            model.lambda_derivative(lambda, order, grid, 5, history, 0.7);
        const double fd = lambda_fd(model, lambda, grid, 5, history, 0.7, order);
        CHECK(std::fabs(analytic - fd) < 1e-6);
      }
    }
  }
}

TEST_CASE("quadratic parametrization: order-1 derivative is 2 lambda f") {
  const TimeGrid grid(8);
  const auto model = DriftModel::markov(
      tanh_map(), {LambdaParametrization::Kind::kQuadratic});
  std::vector<double> history(grid.n_steps + 1, 0.5);
  const double expected = 6.0 * std::tanh(0.5);
  CHECK(model.lambda_derivative(3.0, 1, grid, 2, history, 0.0) ==
        doctest::Approx(expected));
  CHECK(model.lambda_derivative(3.0, 2, grid, 2, history, 0.0) ==
        doctest::Approx(2.0 * std::tanh(0.5)));
}

TEST_CASE("linear parametrization: order 1 is the unit drift, order 2 zero") {
  const TimeGrid grid(8);
  const auto channel = DriftModel::gauss_channel(1.0);
  const std::vector<double> history(grid.n_steps + 1, 0.0);
  CHECK(channel.lambda_derivative(0.3, 1, grid, 2, history, 0.7) ==
        doctest::Approx(0.7));
  CHECK(channel.lambda_derivative(0.3, 2, grid, 2, history, 0.7) == 0.0);
  CHECK_THROWS_AS(channel.lambda_derivative(0.3, 3, grid, 2, history, 0.7),
                  std::invalid_argument);
}

TEST_CASE("build_u: zero at lambda 0, primitive for deterministic, channel") {
  const TimeGrid grid(64);
  RngStream rng(17, 0);
  const auto w = sample_wiener(grid, rng);

  const auto det = DriftModel::deterministic([](double) { return 1.0; });
  const auto zero = build_u(det, 0.0, w, 0.0);
  for (double d : zero.u.density()) CHECK(d == 0.0);

  const auto unit = build_u(det, 1.0, w, 0.0);
  CHECK(unit.u.primitive().back() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i <= grid.n_steps; ++i)
    CHECK(unit.u.primitive()[i] == doctest::Approx(grid.node(i)));

  const auto channel = DriftModel::gauss_channel(1.0);
  const auto shifted = build_u(channel, 1.0, w, 0.7);
  CHECK(shifted.u.primitive().back() == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("build_u joint accumulation for markov drifts") {
  const TimeGrid grid(128);
  RngStream rng(21, 0);
  const auto w = sample_wiener(grid, rng);
  const auto markov = DriftModel::markov(tanh_map());
  const auto realized = build_u(markov, 1.0, w, 0.0);
  // U must satisfy the Euler recursion driven by w.
  double u_val = 0.0;
  for (int i = 0; i < grid.n_steps; ++i) {
    CHECK(realized.obs_values[i] == doctest::Approx(u_val).epsilon(1e-12));
    u_val += w.increments()[i] + std::tanh(u_val) * grid.dt;
  }
  // Drift density must be the drift evaluated on the realized observation.
  for (int i = 0; i < grid.n_steps; ++i)
    CHECK(realized.u.density()[i] ==
          doctest::Approx(std::tanh(realized.obs_values[i])).epsilon(1e-12));
}

TEST_CASE("cm norm of built drifts matches closed form") {
  const TimeGrid grid(1024);
  RngStream rng(4, 0);
  const auto w = sample_wiener(grid, rng);

  const auto channel = DriftModel::gauss_channel(1.0);
  const double m = -1.3;
  for (double lambda : {0.25, 1.0}) {
    const auto realized = build_u(channel, lambda, w, m);
    CHECK(cm_norm_sq(realized.u) ==
          doctest::Approx(lambda * lambda * m * m).epsilon(1e-12));
  }

  const auto det = DriftModel::deterministic([](double) { return 1.0; });
  const auto realized = build_u(det, 0.8, w, 0.0);
  CHECK(cm_norm_sq(realized.u) == doctest::Approx(0.64).epsilon(1e-12));
}

TEST_CASE("parameter laws") {
  RngStream rng(31, 1);
  const auto gauss = ParameterLaw::gaussian(4.0);
  CHECK(gauss.variance() == 4.0);
  double acc = 0.0, acc2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double m = gauss.sample(rng);
    acc += m;
    acc2 += m * m;
  }
  CHECK(std::fabs(acc / n) < 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));
  CHECK(acc2 / n == doctest::Approx(4.0).epsilon(0.05));

  const auto uni = ParameterLaw::uniform(-1.0, 3.0);
  CHECK(uni.mean() == doctest::Approx(1.0));
  CHECK(uni.variance() == doctest::Approx(16.0 / 12.0));
  const auto point = ParameterLaw::point_mass(2.5);
  CHECK(point.sample(rng) == 2.5);
  CHECK_THROWS_AS(ParameterLaw::uniform(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ParameterLaw::gaussian(-1.0), std::invalid_argument);
}
