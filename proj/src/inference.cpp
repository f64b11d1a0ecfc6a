#include "seqcf/inference.hpp"

#include <cmath>

#include "seqcf/errors.hpp"

namespace seqcf {

double inv_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ArgumentError("inv_normal_cdf: p must lie in (0, 1)");
  }
  // Acklam's rational approximation, then one Halley refinement with erfc;
  // the refined result is accurate to ~1e-15.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / 1.4142135623730951) - p;
  const double u = e * 2.5066282746310005024 * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double z_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ArgumentError("z_quantile: alpha must lie in (0, 1)");
  }
  return inv_normal_cdf(1.0 - 0.5 * alpha);
}

IntervalEstimate prediction_interval(const Estimate& est, double sigma_hat,
                                     double alpha) {
  if (est.fallback != Fallback::None) {
    throw IntervalUnavailableError(
        "prediction_interval: no neighbors, interval undefined for fallback "
        "estimates");
  }
  if (!(sigma_hat >= 0.0)) {
    throw ArgumentError("prediction_interval: sigma_hat must be >= 0");
  }
  IntervalEstimate iv;
  iv.center = est.value;
  iv.half_width =
      z_quantile(alpha) * sigma_hat / std::sqrt(static_cast<double>(est.neighbor_count));
  iv.level = 1.0 - alpha;
  iv.n_effective = est.neighbor_count;
  return iv;
}

double population_estimate(const ExperimentLog& log,
                           const std::vector<Estimate>& estimates, int a) {
  const int n = log.num_units();
  const int t_count = log.num_times();
  if (estimates.size() != static_cast<std::size_t>(n) * t_count) {
    throw ArgumentError("population_estimate: estimate grid size mismatch");
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_count; ++t) {
      if (log.treatments(i, t) == a) {
        sum += log.outcomes(i, t);
      } else {
        sum += estimates[static_cast<std::size_t>(i) * t_count + t].value;
      }
    }
  }
  return sum / (static_cast<double>(n) * static_cast<double>(t_count));
}

IntervalEstimate subsample_ci(const std::vector<Estimate>& estimates,
                              int n_units, int n_times, int k, double alpha,
                              RngStream& rng) {
  const long long total = static_cast<long long>(n_units) * n_times;
  if (k < 2) throw ArgumentError("subsample_ci: K must be >= 2");
  if (k > total) throw ArgumentError("subsample_ci: K exceeds N*T");
  if (estimates.size() != static_cast<std::size_t>(total)) {
    throw ArgumentError("subsample_ci: estimate grid size mismatch");
  }

  const std::vector<int> idx =
      rng.sample_without_replacement(static_cast<int>(total), k);
  double mean = 0.0;
  for (int cell : idx) mean += estimates[cell].value;
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (int cell : idx) {
    const double d = estimates[cell].value - mean;
    ss += d * d;
  }
  const double sd_k = std::sqrt(ss / static_cast<double>(k - 1));

  IntervalEstimate iv;
  iv.center = mean;
  iv.half_width = z_quantile(alpha) * sd_k / std::sqrt(static_cast<double>(k));
  iv.level = 1.0 - alpha;
  iv.n_effective = k;
  return iv;
}

}  // namespace seqcf
