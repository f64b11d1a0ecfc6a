#pragma once

#include <Eigen/Dense>
#include <vector>

#include "seqcf/estimator.hpp"
#include "seqcf/model.hpp"
#include "seqcf/rng.hpp"

namespace seqcf {

/// Symmetric normal-quantile interval [center - half_width, center + half_width].
struct IntervalEstimate {
  double center = 0.0;
  double half_width = 0.0;
  double level = 0.95;  // 1 - alpha
  int n_effective = 0;  // n-hat for prediction intervals, K for the CI

  double lo() const { return center - half_width; }
  double hi() const { return center + half_width; }
  bool covers(double x) const { return lo() <= x && x <= hi(); }
};

/// Inverse standard normal CDF, accurate to well below 1e-9.
double inv_normal_cdf(double p);

/// 1 - alpha/2 standard normal quantile.
double z_quantile(double alpha);

/// Prediction interval for theta_{i,t}: center = estimate, half width
/// z_{alpha/2} * sigma_hat / sqrt(n-hat). Defined only for neighbor-based
/// estimates (fallback == none); otherwise IntervalUnavailableError.
IntervalEstimate prediction_interval(const Estimate& est, double sigma_hat,
                                     double alpha);

/// (1/NT) sum of observed Y where A = a and the estimate elsewhere.
double population_estimate(const ExperimentLog& log,
                           const std::vector<Estimate>& estimates, int a);

/// Confidence interval for the population mean: subsample K cells without
/// replacement, use their estimate mean and sample standard deviation.
IntervalEstimate subsample_ci(const std::vector<Estimate>& estimates,
                              int n_units, int n_times, int k, double alpha,
                              RngStream& rng);

}  // namespace seqcf
