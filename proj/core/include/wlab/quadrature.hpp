#pragma once

#include <vector>

namespace wlab {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized to sum to 1
};

// Nodes and probability weights for E[f(m)], m ~ N(0, sigma2)
// (Gauss-Hermite) or m ~ Uniform(a, b) (Gauss-Legendre).
QuadratureRule gauss_hermite_prob(int n, double sigma2);
QuadratureRule gauss_legendre_prob(int n, double a, double b);

}  // namespace wlab
