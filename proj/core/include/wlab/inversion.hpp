#pragma once

#include <vector>

#include "wlab/entropy.hpp"
#include "wlab/model.hpp"
#include "wlab/path.hpp"

namespace wlab {

// Candidate inverse of the shift U = I + u along an observed path, solved
// by the Euler step
//   V(t_{i+1}) = V(t_i) - udot_lambda(t_i, obs history, m) dt + dW_i,
// where the drift is read off the observation process of V (which on the
// grid is the observed path itself).  Both roundtrip compositions are
// evaluated on the grid.
struct InverseSolveReport {
  std::vector<double> v_values;  // candidate base path, node values
  double sup_u_of_v = 0.0;       // || U(V(w)) - w ||_inf
  double sup_v_of_u = 0.0;       // || V(U(w)) - w ||_inf
  bool converged = false;
};

InverseSolveReport invert_shift(const DriftModel& model, double lambda,
                                const WienerPath& w, double m = 0.0);

// Fine-grid self oracle for the inverse solve: simulate the forward SDE on
// a reference grid, downsample the observation to each coarse grid, invert
// there, and compare with the reference base path at the shared nodes.
struct RefinementReport {
  std::vector<int> n_values;
  std::vector<double> rms;  // per coarse grid
  double order = 0.0;       // mean dyadic convergence order
};

RefinementReport inversion_refinement(const DriftModel& model, double lambda,
                                      const std::vector<int>& n_values,
                                      int n_reference, int n_paths,
                                      std::uint64_t seed, double m = 0.0);

// Invertibility certificate along a lambda homotopy: per-lambda entropy gap
// (zero iff invertible) and the empirical finiteness report of the
// integrand rho(-delta u_a) |E[delta(K_a u'_a) | U_a]|.
struct HomotopyRow {
  double lambda = 0.0;
  double gap = 0.0;
  double gap_se = 0.0;
  double integrand_mean = 0.0;
  double integrand_se = 0.0;
  double integrand_max = 0.0;
};

struct HomotopyReport {
  std::vector<HomotopyRow> rows;
  bool verdict = false;  // all gaps within 3 SE of zero
};

HomotopyReport homotopy_invertibility(const ScenarioContext& ctx,
                                      const std::vector<double>& lambdas);

}  // namespace wlab
