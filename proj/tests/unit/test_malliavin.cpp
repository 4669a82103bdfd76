#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "wlab/malliavin.hpp"
#include "wlab/stats.hpp"

using namespace wlab;

namespace {

WienerPath sample_path(const TimeGrid& grid, std::uint64_t stream) {
  RngStream rng(404, stream);
  return sample_wiener(grid, rng);
}

// Anticipative constant field vdot(s) = W(1): Jacobian entries are all
// dt under the fixed convention.
JacobianMatrix terminal_value_jacobian(const TimeGrid& grid) {
  JacobianMatrix jac(grid.n_steps);
  for (int i = 0; i < grid.n_steps; ++i)
    for (int j = 0; j < grid.n_steps; ++j) jac.at(i, j) = grid.dt;
  return jac;
}

}  // namespace

TEST_CASE("deterministic and channel drifts have zero gradient") {
  const TimeGrid grid(64);
  const auto w = sample_path(grid, 0);
  const auto det = DriftModel::deterministic([](double t) { return t; });
  CHECK(gradient_matrix(det, 1.0, w, 0.0).hs_norm() == 0.0);
  const auto channel = DriftModel::gauss_channel(1.0);
  CHECK(gradient_matrix(channel, 1.0, w, 0.9).hs_norm() == 0.0);
}

TEST_CASE("linear path functional: hand chain rule M[i][j] = lambda dt") {
  const TimeGrid grid(32);
  const auto w = sample_path(grid, 1);
  const double lambda = 0.7;
  const auto model = DriftModel::path_functional(identity_map());
  const auto jac = gradient_matrix(model, lambda, w, 0.0);
  for (int i = 0; i < grid.n_steps; ++i)
    for (int j = 0; j < grid.n_steps; ++j) {
      const double expected = j < i ? lambda * grid.dt : 0.0;
      CHECK(jac.at(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("analytic vs finite-difference Jacobians agree") {
  const TimeGrid grid(48);
  const auto w = sample_path(grid, 2);
  std::vector<DriftModel> zoo;
  zoo.push_back(DriftModel::path_functional(identity_map()));
  zoo.push_back(DriftModel::path_functional(tanh_map()));
  zoo.push_back(DriftModel::markov(tanh_map()));
  for (const auto& model : zoo) {
    const auto analytic = gradient_matrix(model, 1.0, w, 0.0);
    const auto fd =
        gradient_matrix(model, 1.0, w, 0.0, GradientMode::kFiniteDifference);
    double worst = 0.0;
    for (int i = 0; i < grid.n_steps; ++i)
      for (int j = 0; j < grid.n_steps; ++j)
        worst = std::max(worst, std::fabs(analytic.at(i, j) - fd.at(i, j)));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("quasi-nilpotency defect") {
  const TimeGrid grid(64);
  const auto w = sample_path(grid, 3);
  const auto markov = DriftModel::markov(tanh_map());
  CHECK(gradient_matrix(markov, 1.0, w, 0.0).quasi_nilpotency_defect() <=
        1e-8);
  CHECK(JacobianMatrix(16).quasi_nilpotency_defect() == 0.0);
  CHECK(terminal_value_jacobian(grid).quasi_nilpotency_defect() ==
        doctest::Approx(grid.dt));
  // Finite-difference Jacobians carry rounding noise in the upper part.
  CHECK(gradient_matrix(markov, 1.0, w, 0.0, GradientMode::kFiniteDifference)
            .quasi_nilpotency_defect() <= 1e-5);
}

TEST_CASE("divergence: zero field, adapted field, anticipative field") {
  const TimeGrid grid(128);
  const auto w = sample_path(grid, 4);

  const std::vector<double> zero(grid.n_steps, 0.0);
  CHECK(divergence(zero, JacobianMatrix(grid.n_steps), w) == 0.0);

  const auto markov = DriftModel::markov(tanh_map());
  const auto realized = build_u(markov, 1.0, w, 0.0);
  const auto jac = gradient_matrix(markov, 1.0, w, 0.0);
  const double div = divergence(realized.u.density(), jac, w);
  const double ito = ito_integral(realized.u.density(), w);
  CHECK(std::fabs(div - ito) <= 1e-8);

  // vdot(s) = W(1): delta(v) = W(1)^2 - 1 exactly on the grid.
  const std::vector<double> field(grid.n_steps, w.terminal());
  const double skorohod = divergence(field, terminal_value_jacobian(grid), w);
  CHECK(skorohod ==
        doctest::Approx(w.terminal() * w.terminal() - 1.0).epsilon(1e-12));
}

TEST_CASE("anticipative divergence has zero mean over many paths") {
  const TimeGrid grid(64);
  const int n_paths = 100000;
  std::vector<double> values(n_paths);
  const auto jac = terminal_value_jacobian(grid);
  for (int p = 0; p < n_paths; ++p) {
    const auto w = sample_path(grid, 1000 + p);
    const std::vector<double> field(grid.n_steps, w.terminal());
    values[p] = divergence(field, jac, w);
  }
  const auto stat = plain_mean_se(values);
  CHECK(std::fabs(stat.mean) <= 3.0 * stat.se);
}

TEST_CASE("resolvent: identity, residual, dense LU oracle") {
  const TimeGrid grid(96);
  const int n = grid.n_steps;
  RngStream rng(7, 11);

  JacobianMatrix zero(n);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  CHECK(resolvent_apply(zero, v) == v);

  JacobianMatrix constant(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) constant.at(i, j) = 0.3;
  const auto x = resolvent_apply(constant, v);
  double residual = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = x[i];
    for (int j = 0; j < i; ++j) row += constant.at(i, j) * x[j];
    residual = std::max(residual, std::fabs(row - v[i]));
    scale = std::max(scale, std::fabs(v[i]));
  }
  CHECK(residual <= 1e-10 * scale);

  // Random strictly lower triangular M against Eigen's dense solver.
  JacobianMatrix random(n);
  Eigen::MatrixXd dense = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      const double entry = rng.normal() / n;
      random.at(i, j) = entry;
      dense(i, j) = entry;
    }
  const auto ours = resolvent_apply(random, v);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs(i) = v[i];
  const Eigen::VectorXd reference = dense.partialPivLu().solve(rhs);
  for (int i = 0; i < n; ++i)
    CHECK(std::fabs(ours[i] - reference(i)) <= 1e-10);

  // Transpose solve against Eigen as well.
  const auto ours_t = resolvent_apply_transpose(random, v);
  const Eigen::VectorXd reference_t =
      dense.transpose().partialPivLu().solve(rhs);
  for (int i = 0; i < n; ++i)
    CHECK(std::fabs(ours_t[i] - reference_t(i)) <= 1e-10);

  CHECK_THROWS_AS(resolvent_apply(terminal_value_jacobian(grid), v),
                  std::invalid_argument);
}

TEST_CASE("carleman: zero matrix") {
  const auto report = carleman_check(JacobianMatrix(32));
  CHECK(report.op_norm_estimate == doctest::Approx(1.0));
  CHECK(report.bound == doctest::Approx(std::exp(0.5)));
  CHECK(report.satisfied);
}

TEST_CASE("carleman: single large entry, op norm from the 2x2 block") {
  JacobianMatrix m(16);
  m.at(5, 2) = 10.0;
  const auto report = carleman_check(m);
  CHECK(report.hs_norm == doctest::Approx(10.0));
  CHECK(report.bound == doctest::Approx(std::exp(50.5)));
  // (I+M)^{-1} = I - M; largest singular value of the active 2x2 block
  // [[1,0],[-10,1]] is sqrt(51 + sqrt(51^2-1)) ~ 10.0990.
  const double expected = std::sqrt(51.0 + std::sqrt(51.0 * 51.0 - 1.0));
  CHECK(report.op_norm_estimate == doctest::Approx(expected).epsilon(1e-6));
  CHECK(report.satisfied);
}

TEST_CASE("carleman bound holds on sampled Jacobians of every adapted kind") {
  const TimeGrid grid(64);
  std::vector<DriftModel> zoo;
  zoo.push_back(DriftModel::deterministic([](double t) { return 1.0 + t; }));
  zoo.push_back(DriftModel::gauss_channel(1.0));
  zoo.push_back(DriftModel::markov(tanh_map()));
  zoo.push_back(DriftModel::path_functional(identity_map()));
  zoo.push_back(DriftModel::path_functional(tanh_map()));
  int checked = 0, satisfied = 0;
  for (const auto& model : zoo) {
    for (int p = 0; p < 20; ++p) {
      const auto w = sample_path(grid, 50 + p);
      RngStream rng_m(404, path_stream_id(50 + p, StreamPurpose::kParameter));
      const double m = model.sample_parameter(rng_m);
      const auto report =
          carleman_check(gradient_matrix(model, 1.0, w, m));
      ++checked;
      if (report.satisfied) ++satisfied;
    }
  }
  CHECK(checked == satisfied);
}

TEST_CASE("hilbert-schmidt norm is the frobenius norm") {
  JacobianMatrix m(8);
  m.at(3, 1) = 3.0;
  m.at(5, 0) = 4.0;
  CHECK(m.hs_norm() == doctest::Approx(5.0));
}
