#include "wlab/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace wlab {

namespace {

struct TableDeleter {
  void operator()(gsl_integration_fixed_workspace* w) const {
    gsl_integration_fixed_free(w);
  }
};

QuadratureRule from_workspace(gsl_integration_fixed_workspace* ws, int n) {
  QuadratureRule rule;
  rule.nodes.assign(gsl_integration_fixed_nodes(ws),
                    gsl_integration_fixed_nodes(ws) + n);
  rule.weights.assign(gsl_integration_fixed_weights(ws),
                      gsl_integration_fixed_weights(ws) + n);
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

QuadratureRule gauss_hermite_prob(int n, double sigma2) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_prob: n must be >= 1");
  if (sigma2 <= 0.0)
    throw std::invalid_argument("gauss_hermite_prob: sigma2 must be > 0");
  // weight exp(-b x^2) with b = 1/(2 sigma2) is the unnormalized N(0, sigma2)
  // density; normalizing the weights absorbs the constant.
  std::unique_ptr<gsl_integration_fixed_workspace, TableDeleter> ws(
      gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, n, 0.0,
                                  1.0 / (2.0 * sigma2), 0.0, 0.0));
  if (!ws) throw std::runtime_error("gauss_hermite_prob: allocation failed");
  return from_workspace(ws.get(), n);
}

QuadratureRule gauss_legendre_prob(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_prob: n must be >= 1");
  if (!(a < b)) throw std::invalid_argument("gauss_legendre_prob: need a < b");
  std::unique_ptr<gsl_integration_fixed_workspace, TableDeleter> ws(
      gsl_integration_fixed_alloc(gsl_integration_fixed_legendre, n, a, b, 0.0,
                                  0.0));
  if (!ws) throw std::runtime_error("gauss_legendre_prob: allocation failed");
  return from_workspace(ws.get(), n);
}

}  // namespace wlab
