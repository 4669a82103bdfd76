#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "wlab/constants.hpp"

namespace wlab {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Sample mean with a leave-one-block-out jackknife standard error.
// Estimators downstream are nonlinear in the per-path records (logs,
// squares, ratios), so block resampling is used uniformly instead of the
// naive sigma/sqrt(n).
inline MeanSe jackknife_mean_se(std::span<const double> values,
                                int block = constants::kJackknifeBlock) {
  const int n = static_cast<int>(values.size());
  if (n == 0) throw std::invalid_argument("jackknife_mean_se: empty sample");
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / n;

  const int n_blocks = (n + block - 1) / block;
  if (n_blocks < 2) {
    // Too few paths for resampling; fall back to the naive SE.
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double var = n > 1 ? ss / (n - 1) : 0.0;
    return {mean, std::sqrt(var / n)};
  }

  double acc = 0.0;
  double sum_loo = 0.0;
  // First pass: leave-one-block-out means.
  // theta_b = (total - block_sum_b) / (n - block_size_b)
  for (int b = 0; b < n_blocks; ++b) {
    const int lo = b * block;
    const int hi = lo + block < n ? lo + block : n;
    double bs = 0.0;
    for (int i = lo; i < hi; ++i) bs += values[i];
    const double theta_b = (total - bs) / (n - (hi - lo));
    sum_loo += theta_b;
    acc += theta_b * theta_b;
  }
  const double loo_mean = sum_loo / n_blocks;
  const double ss = acc - n_blocks * loo_mean * loo_mean;
  const double se =
      std::sqrt(std::max(0.0, ss * (n_blocks - 1) / n_blocks));
  return {mean, se};
}

inline MeanSe plain_mean_se(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  if (n == 0) throw std::invalid_argument("plain_mean_se: empty sample");
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = n > 1 ? ss / (n - 1) : 0.0;
  return {mean, std::sqrt(var / n)};
}

inline double sample_variance(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw std::invalid_argument("sample_variance: need >= 2 values");
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / (n - 1);
}

inline double lag1_autocorrelation(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  if (n < 3) throw std::invalid_argument("lag1_autocorrelation: too short");
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = values[i] - mean;
    den += c * c;
    if (i + 1 < n) num += c * (values[i + 1] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace wlab
