#pragma once

// Discretization conventions shared by every module. There is exactly one
// convention and it lives here; anything that discretizes an operator on the
// Cameron-Martin space must read these instead of re-deriving its own scaling.
//
// Path convention
//   A path on the uniform grid {t_i = i*dt, i = 0..n} is carried as its n
//   increments dW_i = W(t_{i+1}) - W(t_i).  A Cameron-Martin direction h is
//   carried as its density vector hdot(t_i), i = 0..n-1, constant on
//   [t_i, t_{i+1}).  Perturbing W -> W + eps*h shifts dW_i by eps*hdot(t_i)*dt.
//
// Jacobian convention
//   For an H-valued functional u, the discrete Sobolev derivative is the
//   n x n matrix
//       M[i][j] = d udot(t_i) / d dW_j * dt,
//   so that M acts directly on density vectors:
//       (grad_u . h)(t_i) = sum_j M[i][j] * hdot(t_j),
//   the Hilbert-Schmidt norm of the operator is the plain Frobenius norm of
//   M, and the divergence trace correction is sum_i M[i][i] (dt folded in).
//   Adapted drifts give strictly lower triangular M.

namespace wlab::constants {

// Central-difference step for path-space Jacobians: eps = scale * sqrt(dt).
inline constexpr double kGradientFdScale = 1e-5;

// Central-difference step for lambda-derivative cross checks of drift models.
inline constexpr double kLambdaFdStep = 1e-4;

// Forward/backward substitution residual contract for the resolvent.
inline constexpr double kResolventResidualTol = 1e-10;

// A matrix is accepted as (numerically) strictly lower triangular when its
// quasi-nilpotency defect is below this; finite-difference Jacobians carry
// O(1e-6) noise in the upper part.
inline constexpr double kResolventAdaptednessTol = 1e-4;

// Power iteration budget for the operator-norm estimate.  Every iteration
// applies the squared resolvent kPowerIterationBlock times; the remaining
// tail of the eigenvalue climb is bounded by delta * applications and folded
// into the reported estimate, so the tolerance is the relative accuracy of
// the returned operator norm squared.
inline constexpr int kPowerIterationMax = 500;
inline constexpr int kPowerIterationBlock = 16;
inline constexpr double kPowerIterationTol = 1e-3;

// Default spacing of the lambda integration grid for the exponential
// density representation.
inline constexpr double kLambdaIntegrationStep = 1.0 / 64.0;

// Finite-difference steps in lambda for derivative cross checks:
// first derivative uses a central difference with this half-width pattern,
// second derivative a centered second difference.
inline constexpr double kEntropyFdFirstStep = 1.0 / 16.0;
inline constexpr double kEntropyFdSecondStep = 1.0 / 8.0;

// Jackknife block size (paths per block) for standard errors.
inline constexpr int kJackknifeBlock = 64;

// Particle filter controls: resample when ESS < size/2, flag collapse
// below an absolute floor.
inline constexpr double kResampleEssFraction = 0.5;
inline constexpr double kEssCollapseFloor = 10.0;

// Inverse-shift Euler solves are declared divergent past this amplitude.
inline constexpr double kInverseSolveDivergence = 1e6;

}  // namespace wlab::constants
