#include "wlab/path.hpp"

#include <cmath>

namespace wlab {

WienerPath sample_wiener(const TimeGrid& grid, RngStream& rng) {
  std::vector<double> inc(grid.n_steps);
  const double scale = std::sqrt(grid.dt);
  for (double& x : inc) x = scale * rng.normal();
  return WienerPath(grid, std::move(inc));
}

double ito_integral(std::span<const double> integrand, const WienerPath& path) {
  const auto& dw = path.increments();
  if (integrand.size() != dw.size())
    throw std::invalid_argument("ito_integral: integrand length != n_steps");
  double acc = 0.0;
  for (std::size_t i = 0; i < dw.size(); ++i) acc += integrand[i] * dw[i];
  return acc;
}

double cm_norm_sq(const CameronMartinPath& u) {
  double acc = 0.0;
  for (double d : u.density()) acc += d * d;
  return acc * u.grid().dt;
}

WienerPath apply_shift(const WienerPath& path, const CameronMartinPath& u) {
  if (u.grid().n_steps != path.grid().n_steps)
    throw std::invalid_argument("apply_shift: grid mismatch");
  std::vector<double> inc(path.increments());
  const double dt = path.grid().dt;
  for (std::size_t i = 0; i < inc.size(); ++i) inc[i] += u.density()[i] * dt;
  return WienerPath(path.grid(), std::move(inc));
}

}  // namespace wlab
