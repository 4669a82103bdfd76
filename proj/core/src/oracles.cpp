#include "wlab/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wlab::oracle {

namespace {

bool is_gaussian_channel(const DriftModel& model) {
  return model.kind() == DriftKind::kGaussChannel &&
         model.prior().kind == ParameterLaw::Kind::kGaussian;
}

void require_gaussian_channel(const DriftModel& model, const char* who) {
  if (!is_gaussian_channel(model))
    throw std::invalid_argument(std::string(who) +
                                ": closed form needs the gaussian channel");
}

bool is_linear(const DriftModel& model) {
  return model.parametrization().kind == LambdaParametrization::Kind::kLinear;
}

double discrete_h_norm_sq(const DriftModel& model, const TimeGrid& grid) {
  double acc = 0.0;
  for (int i = 0; i < grid.n_steps; ++i) {
    const double hd = model.det_density(grid.node(i));
    acc += hd * hd * grid.dt;
  }
  return acc;
}

}  // namespace

double channel_snr(const DriftModel& model, double lambda) {
  require_gaussian_channel(model, "channel_snr");
  const double g = model.parametrization().g(lambda);
  return g * g * model.prior().sigma2;
}

double channel_tau(const DriftModel& model, double lambda) {
  const double snr = channel_snr(model, lambda);
  return 0.5 * (snr - std::log1p(snr));
}

double channel_mutual_information(const DriftModel& model, double lambda) {
  return 0.5 * std::log1p(channel_snr(model, lambda));
}

double channel_drift_mmse(const DriftModel& model, double lambda) {
  return std::log1p(channel_snr(model, lambda));
}

double channel_signal_mmse(const DriftModel& model, double lambda) {
  const double snr = channel_snr(model, lambda);
  const double sigma2 = model.prior().sigma2;
  return snr > 0.0 ? sigma2 * std::log1p(snr) / snr : sigma2;
}

double channel_drift_nce(const DriftModel& model, double lambda) {
  const double snr = channel_snr(model, lambda);
  return snr / (1.0 + snr);
}

double channel_signal_nce(const DriftModel& model, double lambda) {
  const double snr = channel_snr(model, lambda);
  return model.prior().sigma2 / (1.0 + snr);
}

double channel_filtered_drift(const DriftModel& model, double lambda, double t,
                              double obs_value) {
  const double snr = channel_snr(model, lambda);
  return snr * obs_value / (1.0 + snr * t);
}

double channel_posterior_variance(const DriftModel& model, double lambda,
                                  double t) {
  const double snr = channel_snr(model, lambda);
  return model.prior().sigma2 / (1.0 + snr * t);
}

double channel_dtau(const DriftModel& model, double lambda) {
  require_gaussian_channel(model, "channel_dtau");
  if (!is_linear(model))
    throw std::invalid_argument("channel_dtau: linear parametrization only");
  const double s2 = model.prior().sigma2;
  const double snr = lambda * lambda * s2;
  return lambda * s2 * snr / (1.0 + snr);
}

double channel_d2tau(const DriftModel& model, double lambda) {
  require_gaussian_channel(model, "channel_d2tau");
  if (!is_linear(model))
    throw std::invalid_argument("channel_d2tau: linear parametrization only");
  const double s2 = model.prior().sigma2;
  const double snr = lambda * lambda * s2;
  const double den = 1.0 + snr;
  return s2 * s2 * lambda * lambda * (3.0 + snr) / (den * den);
}

double channel_dmi(const DriftModel& model, double lambda) {
  require_gaussian_channel(model, "channel_dmi");
  if (!is_linear(model))
    throw std::invalid_argument("channel_dmi: linear parametrization only");
  const double s2 = model.prior().sigma2;
  return lambda * s2 / (1.0 + lambda * lambda * s2);
}

double deterministic_theta(const DriftModel& model, double lambda,
                           double h_norm_sq) {
  const double g = model.parametrization().g(lambda);
  return 0.5 * g * g * h_norm_sq;
}

double deterministic_dtheta(const DriftModel& model, double lambda,
                            double h_norm_sq) {
  const auto& p = model.parametrization();
  return p.g(lambda) * p.g1(lambda) * h_norm_sq;
}

double deterministic_d2theta(const DriftModel& model, double lambda,
                             double h_norm_sq) {
  const auto& p = model.parametrization();
  const double g1 = p.g1(lambda);
  return (g1 * g1 + p.g(lambda) * p.g2(lambda)) * h_norm_sq;
}

std::optional<double> lookup(const DriftModel& model, const TimeGrid& grid,
                             const std::string& quantity, double lambda) {
  if (is_gaussian_channel(model)) {
    if (quantity == "theta_direct" || quantity == "theta_rho" ||
        quantity == "tau")
      return channel_tau(model, lambda);
    if (quantity == "mutual_information")
      return channel_mutual_information(model, lambda);
    if (quantity == "drift_mmse") return channel_drift_mmse(model, lambda);
    if (quantity == "signal_mmse") return channel_signal_mmse(model, lambda);
    if (quantity == "drift_nce") return channel_drift_nce(model, lambda);
    if (quantity == "signal_nce") return channel_signal_nce(model, lambda);
    if (quantity == "invertibility_gap")
      return channel_mutual_information(model, lambda);
    if (is_linear(model)) {
      if (quantity == "dtheta_dlambda" || quantity == "dtau_dlambda")
        return channel_dtau(model, lambda);
      if (quantity == "d2theta_dlambda2" || quantity == "d2tau_dlambda2")
        return channel_d2tau(model, lambda);
      if (quantity == "dmi_dlambda") return channel_dmi(model, lambda);
    }
    return std::nullopt;
  }
  if (model.kind() == DriftKind::kDeterministic) {
    const double h2 = discrete_h_norm_sq(model, grid);
    if (quantity == "theta_direct" || quantity == "theta_rho" ||
        quantity == "tau")
      return deterministic_theta(model, lambda, h2);
    if (quantity == "dtheta_dlambda" || quantity == "dtau_dlambda")
      return deterministic_dtheta(model, lambda, h2);
    if (quantity == "d2theta_dlambda2" || quantity == "d2tau_dlambda2")
      return deterministic_d2theta(model, lambda, h2);
    if (quantity == "mutual_information" || quantity == "invertibility_gap" ||
        quantity == "drift_mmse" || quantity == "drift_nce")
      return 0.0;
    return std::nullopt;
  }
  if (model.kind() == DriftKind::kMarkov) {
    // Drift observable from U: zero estimation error, zero gap.
    if (quantity == "drift_mmse" || quantity == "drift_nce" ||
        quantity == "mutual_information" || quantity == "invertibility_gap")
      return 0.0;
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace wlab::oracle
