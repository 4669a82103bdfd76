#include "wlab/malliavin.hpp"

#include <cmath>
#include <stdexcept>

#include "wlab/constants.hpp"

namespace wlab {

double JacobianMatrix::quasi_nilpotency_defect() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) worst = std::max(worst, std::fabs(at(i, j)));
  return worst;
}

double JacobianMatrix::hs_norm() const {
  double acc = 0.0;
  for (double x : a_) acc += x * x;
  return std::sqrt(acc);
}

std::vector<double> JacobianMatrix::apply(std::span<const double> v) const {
  if (static_cast<int>(v.size()) != n_)
    throw std::invalid_argument("JacobianMatrix::apply: dimension mismatch");
  std::vector<double> out(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    const double* row = &a_[static_cast<std::size_t>(i) * n_];
    double acc = 0.0;
    for (int j = 0; j < n_; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

std::vector<double> JacobianMatrix::apply_transpose(
    std::span<const double> v) const {
  if (static_cast<int>(v.size()) != n_)
    throw std::invalid_argument("JacobianMatrix::apply_transpose: dimension mismatch");
  std::vector<double> out(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    const double* row = &a_[static_cast<std::size_t>(i) * n_];
    const double vi = v[i];
    for (int j = 0; j < n_; ++j) out[j] += row[j] * vi;
  }
  return out;
}

namespace {

// d U(t_i)/d dW_j for the markov SDE U_{i+1} = U_i + dW_i + g f(U_i) dt,
// propagated forward: A[i+1][j] = A[i][j] (1 + g f'(U_i) dt) + 1{i==j}.
// The drift Jacobian is then M[i][j] = g f'(U_i) A[i][j] dt, strictly
// lower triangular because A[i][j] = 0 for j >= i.
JacobianMatrix markov_jacobian(const DriftModel& model, double lambda,
                               const WienerPath& w, double m) {
  const TimeGrid& grid = w.grid();
  const int n = grid.n_steps;
  const double g = model.parametrization().g(lambda);
  const auto realized = build_u(model, lambda, w, m);
  const auto& obs = realized.obs_values;
  JacobianMatrix jac(n);
  std::vector<double> sens(n, 0.0);  // A[i][.] row, updated in place
  for (int i = 0; i < n; ++i) {
    const double slope = model.nonlinearity().df(obs[i]);
    for (int j = 0; j < i; ++j) jac.at(i, j) = g * slope * sens[j] * grid.dt;
    const double growth = 1.0 + g * slope * grid.dt;
    for (int j = 0; j < i; ++j) sens[j] *= growth;
    sens[i] = 1.0;  // contribution of dW_i to U(t_{i+1})
  }
  return jac;
}

}  // namespace

JacobianMatrix gradient_matrix(const DriftModel& model, double lambda,
                               const WienerPath& w, double m,
                               GradientMode mode) {
  const TimeGrid& grid = w.grid();
  const int n = grid.n_steps;

  if (mode == GradientMode::kFiniteDifference) {
    auto field = [&](const WienerPath& path) {
      return build_u(model, lambda, path, m).u.density();
    };
    return field_jacobian_fd(field, w);
  }

  switch (model.kind()) {
    case DriftKind::kDeterministic:
    case DriftKind::kGaussChannel:
      return JacobianMatrix(n);  // no path dependence
    case DriftKind::kPathFunctional: {
      // udot(t_i) = g f(W(t_i)); dW(t_i)/d dW_j = 1 for j < i.
      JacobianMatrix jac(n);
      const double g = model.parametrization().g(lambda);
      const auto& values = w.values();
      for (int i = 0; i < n; ++i) {
        const double slope = model.nonlinearity().df(values[i]);
        for (int j = 0; j < i; ++j) jac.at(i, j) = g * slope * grid.dt;
      }
      return jac;
    }
    case DriftKind::kMarkov:
      return markov_jacobian(model, lambda, w, m);
  }
  throw std::logic_error("gradient_matrix: unknown kind");
}

JacobianMatrix field_jacobian_fd(
    const std::function<std::vector<double>(const WienerPath&)>& field,
    const WienerPath& w) {
  const TimeGrid& grid = w.grid();
  const int n = grid.n_steps;
  const double eps = constants::kGradientFdScale * std::sqrt(grid.dt);
  JacobianMatrix jac(n);
  std::vector<double> inc = w.increments();
  for (int j = 0; j < n; ++j) {
    const double saved = inc[j];
    inc[j] = saved + eps;
    const auto up = field(WienerPath(grid, inc));
    inc[j] = saved - eps;
    const auto dn = field(WienerPath(grid, inc));
    inc[j] = saved;
    for (int i = 0; i < n; ++i) {
      const double d = (up[i] - dn[i]) / (2.0 * eps);
      if (!std::isfinite(d))
        throw std::runtime_error("field_jacobian_fd: non-finite perturbation");
      jac.at(i, j) = d * grid.dt;
    }
  }
  return jac;
}

double divergence(std::span<const double> density, const JacobianMatrix& jac,
                  const WienerPath& w) {
  const int n = w.grid().n_steps;
  if (static_cast<int>(density.size()) != n || jac.size() != n)
    throw std::invalid_argument("divergence: dimension mismatch");
  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += jac.at(i, i);
  return ito_integral(density, w) - trace;
}

std::vector<double> resolvent_apply(const JacobianMatrix& m,
                                    std::span<const double> v) {
  const int n = m.size();
  if (static_cast<int>(v.size()) != n)
    throw std::invalid_argument("resolvent_apply: dimension mismatch");
  if (m.quasi_nilpotency_defect() > constants::kResolventAdaptednessTol)
    throw std::invalid_argument(
        "resolvent_apply: matrix is not strictly lower triangular");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    double acc = v[i];
    for (int j = 0; j < i; ++j) acc -= m.at(i, j) * x[j];
    x[i] = acc;
  }
  return x;
}

std::vector<double> resolvent_apply_transpose(const JacobianMatrix& m,
                                              std::span<const double> v) {
  const int n = m.size();
  if (static_cast<int>(v.size()) != n)
    throw std::invalid_argument("resolvent_apply_transpose: dimension mismatch");
  if (m.quasi_nilpotency_defect() > constants::kResolventAdaptednessTol)
    throw std::invalid_argument(
        "resolvent_apply_transpose: matrix is not strictly lower triangular");
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double acc = v[i];
    for (int j = i + 1; j < n; ++j) acc -= m.at(j, i) * x[j];
    x[i] = acc;
  }
  return x;
}

CarlemanReport carleman_check(const JacobianMatrix& m) {
  const int n = m.size();
  CarlemanReport report;
  report.hs_norm = m.hs_norm();
  report.bound = std::exp(0.5 * (report.hs_norm * report.hs_norm + 1.0));

  // Largest singular value of K = (I+M)^{-1} by power iteration on
  // B = K^T K, applied in fixed blocks.  Volterra-type resolvents have
  // band-edge spectra where the Rayleigh value climbs like lambda - c/it,
  // so the stopping rule bounds the remaining tail by delta * it (exact
  // order for the algebraic regime, conservative for geometric decay) and
  // the reported estimate includes that tail.
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double value = 0.0;
  double tail = 0.0;
  bool converged = false;
  for (int it = 1; it <= constants::kPowerIterationMax; ++it) {
    double norm = 0.0;
    for (int inner = 0; inner < constants::kPowerIterationBlock; ++inner) {
      auto y = resolvent_apply(m, x);
      auto z = resolvent_apply_transpose(m, y);
      norm = 0.0;
      for (double c : z) norm += c * c;
      norm = std::sqrt(norm);
      if (norm == 0.0)
        throw std::runtime_error("carleman_check: power iteration degenerated");
      for (int i = 0; i < n; ++i) x[i] = z[i] / norm;
    }
    report.iterations = it;
    const double prev = value;
    value = norm;  // last growth factor estimates lambda_max(B)
    const double applications =
        static_cast<double>(it) * constants::kPowerIterationBlock;
    tail = std::fabs(value - prev) / constants::kPowerIterationBlock *
           applications;
    if (it >= 2 && tail <= constants::kPowerIterationTol * std::max(1.0, value)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error(
        "carleman_check: power iteration did not converge within budget");
  report.op_norm_estimate = std::sqrt(value + tail);
  report.satisfied = report.op_norm_estimate <= report.bound * (1.0 + 1e-9);
  return report;
}

}  // namespace wlab
