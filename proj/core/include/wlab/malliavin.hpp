#pragma once

#include <span>
#include <vector>

#include "wlab/model.hpp"
#include "wlab/path.hpp"

namespace wlab {

// Discretized Sobolev derivative of an H-valued functional, stored under
// the convention of constants.hpp: M[i][j] = d udot(t_i)/d dW_j * dt, so
// M acts on density vectors and its Frobenius norm is the Hilbert-Schmidt
// norm of the operator on H.  Adapted drifts give M strictly lower
// triangular.
class JacobianMatrix {
 public:
  explicit JacobianMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  int size() const { return n_; }
  double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

  // max |M[i][j]| over j >= i; zero for exactly adapted fields.
  double quasi_nilpotency_defect() const;

  // Frobenius norm == Hilbert-Schmidt norm under the fixed convention.
  double hs_norm() const;

  // y(t_i) = sum_j M[i][j] v(t_j): the operator applied to a density.
  std::vector<double> apply(std::span<const double> v) const;

  // y = M^T v.
  std::vector<double> apply_transpose(std::span<const double> v) const;

 private:
  int n_;
  std::vector<double> a_;
};

enum class GradientMode { kAnalytic, kFiniteDifference };

// Jacobian of the drift field u_lambda at the sampled point (w, m).
// Analytic mode uses the model's chain rule; finite differences perturb
// each increment by eps = kGradientFdScale * sqrt(dt) centrally and
// rebuild the drift.
JacobianMatrix gradient_matrix(const DriftModel& model, double lambda,
                               const WienerPath& w, double m,
                               GradientMode mode = GradientMode::kAnalytic);

// Jacobian of an arbitrary field w -> density vector, by central finite
// differences on the increments.
JacobianMatrix field_jacobian_fd(
    const std::function<std::vector<double>(const WienerPath&)>& field,
    const WienerPath& w);

// Skorohod integral under the fixed convention:
//   delta(v) = sum_i v(t_i) dW_i - sum_i M_v[i][i].
// For adapted v the trace vanishes and this is the Ito sum.
double divergence(std::span<const double> density, const JacobianMatrix& jac,
                  const WienerPath& w);

// x = (I + M)^{-1} v by forward substitution; requires M (numerically)
// strictly lower triangular.  O(n^2).
std::vector<double> resolvent_apply(const JacobianMatrix& m,
                                    std::span<const double> v);

// x = (I + M)^{-T} v by backward substitution.
std::vector<double> resolvent_apply_transpose(const JacobianMatrix& m,
                                              std::span<const double> v);

struct CarlemanReport {
  double op_norm_estimate = 0.0;  // ||(I+M)^{-1}|| via power iteration
  double hs_norm = 0.0;           // ||M||_2
  double bound = 0.0;             // exp((||M||_2^2 + 1)/2)
  bool satisfied = false;
  int iterations = 0;
};

// Checks ||(I+M)^{-1}|| <= exp((||M||_HS^2 + 1)/2), the quasi-nilpotent
// form of the Carleman inequality (det_2(I+M) = 1 for strictly lower
// triangular M).  Throws on power-iteration non-convergence.
CarlemanReport carleman_check(const JacobianMatrix& m);

}  // namespace wlab
