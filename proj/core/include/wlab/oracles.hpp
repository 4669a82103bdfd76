#pragma once

#include <optional>

#include "wlab/model.hpp"

namespace wlab::oracle {

// Closed forms for the constant-signal gaussian channel
// U_lambda = W + g(lambda) m t, m ~ N(0, sigma2), writing
// snr = g(lambda)^2 sigma2.  The conjugate filter has posterior
// m | U_s ~ N( g sigma2 U_s / (1 + snr s), sigma2 / (1 + snr s) ).

double channel_snr(const DriftModel& model, double lambda);

// Entropy of the observation marginal: tau = (snr - log(1+snr)) / 2.
double channel_tau(const DriftModel& model, double lambda);

// Mutual information I(U, m) = log(1 + snr) / 2.
double channel_mutual_information(const DriftModel& model, double lambda);

// Causal error of the drift estimate, E int (udot - E[udot|past])^2
//   = log(1 + snr).
double channel_drift_mmse(const DriftModel& model, double lambda);

// Causal error of the signal estimate, E int (m - E[m|past])^2 ds
//   = sigma2 log(1+snr)/snr  (sigma2 at snr = 0).
double channel_signal_mmse(const DriftModel& model, double lambda);

// Non-causal errors: drift version snr/(1+snr), signal version
// sigma2/(1+snr).
double channel_drift_nce(const DriftModel& model, double lambda);
double channel_signal_nce(const DriftModel& model, double lambda);

// Filtered drift g^2 sigma2 U_t / (1 + snr t) and posterior variance.
double channel_filtered_drift(const DriftModel& model, double lambda, double t,
                              double obs_value);
double channel_posterior_variance(const DriftModel& model, double lambda,
                                  double t);

// d tau / d lambda and d^2 tau / d lambda^2 (linear parametrization).
double channel_dtau(const DriftModel& model, double lambda);
double channel_d2tau(const DriftModel& model, double lambda);

// d I / d lambda = lambda sigma2 / (1 + snr) (linear parametrization);
// equals lambda times the terminal signal mmse.
double channel_dmi(const DriftModel& model, double lambda);

// Deterministic shift by g(lambda) h: entropy g^2 ||h||^2 / 2 and its
// lambda derivatives.
double deterministic_theta(const DriftModel& model, double lambda,
                           double h_norm_sq);
double deterministic_dtheta(const DriftModel& model, double lambda,
                            double h_norm_sq);
double deterministic_d2theta(const DriftModel& model, double lambda,
                             double h_norm_sq);

// Oracle for a named report quantity, when the model has one.
std::optional<double> lookup(const DriftModel& model, const TimeGrid& grid,
                             const std::string& quantity, double lambda);

}  // namespace wlab::oracle
