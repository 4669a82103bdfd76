#include "wlab/model.hpp"

#include <cmath>

#include "wlab/normal.hpp"

namespace wlab {

ParameterLaw ParameterLaw::gaussian(double sigma2) {
  if (sigma2 <= 0.0)
    throw std::invalid_argument("ParameterLaw::gaussian: sigma2 must be > 0");
  ParameterLaw law;
  law.kind = Kind::kGaussian;
  law.sigma2 = sigma2;
  return law;
}

ParameterLaw ParameterLaw::point_mass(double c) {
  ParameterLaw law;
  law.kind = Kind::kPointMass;
  law.value = c;
  return law;
}

ParameterLaw ParameterLaw::uniform(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("ParameterLaw::uniform: need a < b");
  ParameterLaw law;
  law.kind = Kind::kUniform;
  law.lo = a;
  law.hi = b;
  return law;
}

double ParameterLaw::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::kGaussian: return std::sqrt(sigma2) * rng.normal();
    case Kind::kPointMass: return value;
    case Kind::kUniform: return rng.uniform(lo, hi);
  }
  return 0.0;
}

double ParameterLaw::quantile(double u) const {
  switch (kind) {
    case Kind::kGaussian: return std::sqrt(sigma2) * inverse_normal_cdf(u);
    case Kind::kPointMass: return value;
    case Kind::kUniform: return lo + (hi - lo) * u;
  }
  return 0.0;
}

double ParameterLaw::mean() const {
  switch (kind) {
    case Kind::kGaussian: return 0.0;
    case Kind::kPointMass: return value;
    case Kind::kUniform: return 0.5 * (lo + hi);
  }
  return 0.0;
}

double ParameterLaw::variance() const {
  switch (kind) {
    case Kind::kGaussian: return sigma2;
    case Kind::kPointMass: return 0.0;
    case Kind::kUniform: return (hi - lo) * (hi - lo) / 12.0;
  }
  return 0.0;
}

ScalarMap tanh_map() {
  return {[](double x) { return std::tanh(x); },
          [](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
          },
          "tanh"};
}

ScalarMap identity_map() {
  return {[](double x) { return x; }, [](double) { return 1.0; }, "linear"};
}

DriftModel DriftModel::deterministic(std::function<double(double)> hdot,
                                     LambdaParametrization p,
                                     std::string hdot_name) {
  DriftModel model;
  model.kind_ = DriftKind::kDeterministic;
  model.param_ = p;
  model.hdot_ = std::move(hdot);
  model.hdot_name_ = std::move(hdot_name);
  return model;
}

DriftModel DriftModel::gauss_channel(double sigma2, LambdaParametrization p) {
  return channel(ParameterLaw::gaussian(sigma2), p);
}

DriftModel DriftModel::channel(ParameterLaw prior, LambdaParametrization p) {
  DriftModel model;
  model.kind_ = DriftKind::kGaussChannel;
  model.param_ = p;
  model.prior_ = prior;
  return model;
}

DriftModel DriftModel::markov(ScalarMap f, LambdaParametrization p) {
  DriftModel model;
  model.kind_ = DriftKind::kMarkov;
  model.param_ = p;
  model.map_ = std::move(f);
  return model;
}

DriftModel DriftModel::path_functional(ScalarMap f, LambdaParametrization p) {
  DriftModel model;
  model.kind_ = DriftKind::kPathFunctional;
  model.param_ = p;
  model.map_ = std::move(f);
  return model;
}

std::string DriftModel::describe() const {
  switch (kind_) {
    case DriftKind::kDeterministic:
      return "deterministic(" + hdot_name_ + ")";
    case DriftKind::kGaussChannel:
      return "channel";
    case DriftKind::kMarkov:
      return "markov(" + map_.name + ")";
    case DriftKind::kPathFunctional:
      return "path_functional(" + map_.name + ")";
  }
  return "?";
}

double DriftModel::unit_drift(const TimeGrid& grid, int step,
                              std::span<const double> history,
                              double m) const {
  if (step < 0 || step >= grid.n_steps)
    throw std::invalid_argument("unit_drift: step out of range");
  switch (kind_) {
    case DriftKind::kDeterministic:
      return hdot_(grid.node(step));
    case DriftKind::kGaussChannel:
      return m;
    case DriftKind::kMarkov:
    case DriftKind::kPathFunctional:
      // History must reach the left endpoint t_step; later values are
      // structurally out of reach of this call.
      if (static_cast<int>(history.size()) < step + 1)
        throw std::invalid_argument("unit_drift: insufficient history");
      return map_.f(history[step]);
  }
  return 0.0;
}

double DriftModel::eval_drift(double lambda, const TimeGrid& grid, int step,
                              std::span<const double> history,
                              double m) const {
  return param_.g(lambda) * unit_drift(grid, step, history, m);
}

double DriftModel::lambda_derivative(double lambda, int order,
                                     const TimeGrid& grid, int step,
                                     std::span<const double> history,
                                     double m) const {
  const double b = unit_drift(grid, step, history, m);
  if (order == 1) return param_.g1(lambda) * b;
  if (order == 2) return param_.g2(lambda) * b;
  throw std::invalid_argument("lambda_derivative: order must be 1 or 2");
}

bool DriftModel::novikov_guaranteed() const {
  switch (kind_) {
    case DriftKind::kDeterministic:
      return true;  // deterministic shift
    case DriftKind::kGaussChannel:
      return prior_.kind != ParameterLaw::Kind::kGaussian;
    case DriftKind::kMarkov:
      return map_.name == "tanh";
    case DriftKind::kPathFunctional:
      return map_.name == "tanh";
  }
  return false;
}

bool DriftModel::jacobian_state_free() const {
  switch (kind_) {
    case DriftKind::kDeterministic:
    case DriftKind::kGaussChannel:
      return true;
    case DriftKind::kPathFunctional:
      return map_.name == "linear";
    case DriftKind::kMarkov:
      return false;
  }
  return false;
}

ShiftRealization build_u(const DriftModel& model, double lambda,
                         const WienerPath& w, double m) {
  const TimeGrid& grid = w.grid();
  const int n = grid.n_steps;
  std::vector<double> density(n);
  std::vector<double> obs(n + 1);
  obs[0] = 0.0;
  const bool obs_history = model.history_kind() == HistoryKind::kObservation;
  for (int i = 0; i < n; ++i) {
    std::span<const double> hist =
        obs_history ? std::span<const double>(obs.data(), i + 1)
                    : std::span<const double>(w.values().data(), i + 1);
    const double d = model.eval_drift(lambda, grid, i, hist, m);
    if (!std::isfinite(d))
      throw std::runtime_error("build_u: drift evaluated to a non-finite value");
    density[i] = d;
    obs[i + 1] = obs[i] + w.increments()[i] + d * grid.dt;
  }
  return {CameronMartinPath(grid, std::move(density)), std::move(obs)};
}

std::vector<double> drift_field(const DriftModel& model, double lambda,
                                int order, const TimeGrid& grid,
                                std::span<const double> obs_values,
                                std::span<const double> base_values,
                                double m) {
  const int n = grid.n_steps;
  std::vector<double> out(n);
  const bool obs_history = model.history_kind() == HistoryKind::kObservation;
  const auto& src = obs_history ? obs_values : base_values;
  if (static_cast<int>(src.size()) < n + 1)
    throw std::invalid_argument("drift_field: history too short");
  for (int i = 0; i < n; ++i) {
    std::span<const double> hist(src.data(), i + 1);
    out[i] = order == 0 ? model.eval_drift(lambda, grid, i, hist, m)
                        : model.lambda_derivative(lambda, order, grid, i, hist, m);
  }
  return out;
}

}  // namespace wlab
