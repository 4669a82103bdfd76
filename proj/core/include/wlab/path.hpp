#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "wlab/rng.hpp"

namespace wlab {

// Uniform partition of [0,1]: t_i = i/n_steps.
struct TimeGrid {
  explicit TimeGrid(int n) : n_steps(n), dt(1.0 / n) {
    if (n < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
  }
  int n_steps;
  double dt;
  double node(int i) const { return i * dt; }
};

// Brownian path stored as increments; values are the running sums,
// values[0] = 0, values[i] = sum_{j<i} increments[j].
class WienerPath {
 public:
  WienerPath(TimeGrid grid, std::vector<double> increments)
      : grid_(grid), increments_(std::move(increments)) {
    if (static_cast<int>(increments_.size()) != grid_.n_steps)
      throw std::invalid_argument("WienerPath: increment count != n_steps");
    values_.resize(increments_.size() + 1);
    values_[0] = 0.0;
    for (std::size_t i = 0; i < increments_.size(); ++i)
      values_[i + 1] = values_[i] + increments_[i];
  }

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& increments() const { return increments_; }
  const std::vector<double>& values() const { return values_; }
  double terminal() const { return values_.back(); }

 private:
  TimeGrid grid_;
  std::vector<double> increments_;
  std::vector<double> values_;
};

// Cameron-Martin path stored as its density udot(t_i); the primitive is the
// running Riemann sum, primitive[0] = 0.
class CameronMartinPath {
 public:
  CameronMartinPath(TimeGrid grid, std::vector<double> density)
      : grid_(grid), density_(std::move(density)) {
    if (static_cast<int>(density_.size()) != grid_.n_steps)
      throw std::invalid_argument("CameronMartinPath: density size != n_steps");
    primitive_.resize(density_.size() + 1);
    primitive_[0] = 0.0;
    for (std::size_t i = 0; i < density_.size(); ++i)
      primitive_[i + 1] = primitive_[i] + density_[i] * grid_.dt;
  }

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& density() const { return density_; }
  const std::vector<double>& primitive() const { return primitive_; }

 private:
  TimeGrid grid_;
  std::vector<double> density_;
  std::vector<double> primitive_;
};

// Independent N(0, dt) increments, deterministic for a given stream.
WienerPath sample_wiener(const TimeGrid& grid, RngStream& rng);

// Left-endpoint (Ito) increment sum: sum_i integrand[i] * dW_i.
// The integrand must be one density value per step.
double ito_integral(std::span<const double> integrand, const WienerPath& path);

// ||u||_H^2 = sum udot(t_i)^2 * dt.
double cm_norm_sq(const CameronMartinPath& u);

// U = W + u: output increments dW_i + udot(t_i)*dt.
WienerPath apply_shift(const WienerPath& path, const CameronMartinPath& u);

}  // namespace wlab
