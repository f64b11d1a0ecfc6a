#include "seqcf/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "seqcf/errors.hpp"

namespace seqcf {

namespace {

struct ResidualSums {
  std::vector<double> loss;  // one per eta
  long long count = 0;
  long long n_self = 0;
};

/// Squared prediction residuals on treated T2 entries for every eta in an
/// ascending grid, sharing one pass per entry.
///
/// Distances come from `dist` (computed on T1 by the callers). Each
/// candidate's grid bin is tabulated once per unit block; the hot loop then
/// sweeps the per-time treated lists accumulating bin histograms, and the
/// per-eta neighbor counts/sums fall out as prefix sums over bins.
ResidualSums calibration_residuals(const ExperimentLog& log, int a,
                                   const DistanceMatrix& dist,
                                   const std::vector<double>& etas,
                                   const std::vector<int>& t2) {
  const int n = log.num_units();
  const int n_eta = static_cast<int>(etas.size());
  if (n_eta > 254) {
    throw ArgumentError("calibration: threshold grids above 254 points unsupported");
  }
  const int junk = n_eta;  // bin for self / infinite / beyond-grid candidates
  const int t2_count = static_cast<int>(t2.size());

  // Per-time treated index lists and leave-one-out column statistics.
  std::vector<std::vector<int>> treated(t2_count);
  std::vector<double> col_sum(t2_count, 0.0);
  for (int k = 0; k < t2_count; ++k) {
    const int t = t2[k];
    treated[k].reserve(n);
    for (int j = 0; j < n; ++j) {
      if (log.treatments(j, t) == a) {
        treated[k].push_back(j);
        col_sum[k] += log.outcomes(j, t);
      }
    }
  }

  ResidualSums sums;
  sums.loss.assign(n_eta, 0.0);

  constexpr int kBlock = 128;
  std::vector<std::uint8_t> bin_of(static_cast<std::size_t>(kBlock) * n);
  std::vector<double> cnt_bins(junk + 1);
  std::vector<double> sum_bins(junk + 1);

  for (int i0 = 0; i0 < n; i0 += kBlock) {
    const int block = std::min(kBlock, n - i0);
    for (int b = 0; b < block; ++b) {
      const int i = i0 + b;
      const double* rho_i = dist.rho.col(i).data();  // symmetric
      std::uint8_t* bins = bin_of.data() + static_cast<std::size_t>(b) * n;
      for (int j = 0; j < n; ++j) {
        // First grid value >= rho; rho <= eta_g holds exactly when bin <= g.
        const int g = static_cast<int>(
            std::lower_bound(etas.begin(), etas.end(), rho_i[j]) - etas.begin());
        bins[j] = static_cast<std::uint8_t>(j == i ? junk : std::min(g, junk));
      }
    }

    for (int k = 0; k < t2_count; ++k) {
      const int t = t2[k];
      const std::vector<int>& row = treated[k];
      const double* y_col = log.outcomes.col(t).data();
      const int m_col = static_cast<int>(row.size()) - 1;  // peers excluding i
      for (int b = 0; b < block; ++b) {
        const int i = i0 + b;
        if (log.treatments(i, t) != a) continue;
        const double y = log.outcomes(i, t);

        const std::uint8_t* bins = bin_of.data() + static_cast<std::size_t>(b) * n;
        std::fill(cnt_bins.begin(), cnt_bins.end(), 0.0);
        std::fill(sum_bins.begin(), sum_bins.end(), 0.0);
        for (const int j : row) {
          const int g = bins[j];
          cnt_bins[g] += 1.0;
          sum_bins[g] += y_col[j];
        }

        double loo_residual = 0.0;
        bool have_loo = false;
        if (m_col > 0) {
          const double loo_mean = (col_sum[k] - y) / static_cast<double>(m_col);
          const double d = y - loo_mean;
          loo_residual = d * d;
          have_loo = true;
        }
        ++sums.count;
        double cnt = 0.0;
        double sum = 0.0;
        for (int g = 0; g < n_eta; ++g) {
          cnt += cnt_bins[g];
          sum += sum_bins[g];
          if (cnt > 0.0) {
            const double d = y - sum / cnt;
            sums.loss[g] += d * d;
          } else if (have_loo) {
            sums.loss[g] += loo_residual;
          }
          // else: nothing to predict from; zero residual (degenerate).
        }
        // No other treated unit in the column implies no candidates either,
        // so the entry is a self fallback at every eta.
        if (!have_loo) ++sums.n_self;
      }
    }
  }
  return sums;
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> split_halves(int t_count) {
  if (t_count < 2) throw ArgumentError("split_halves: T must be >= 2");
  const int half = t_count / 2;
  std::vector<int> t1(half), t2(t_count - half);
  std::iota(t1.begin(), t1.end(), 0);
  std::iota(t2.begin(), t2.end(), half);
  return {std::move(t1), std::move(t2)};
}

std::vector<double> eta_grid_from_percentiles(const DistanceMatrix& dist, int k) {
  if (k < 1) throw ArgumentError("eta_grid_from_percentiles: k must be >= 1");
  const int n = dist.num_units();
  std::vector<double> finite;
  finite.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = dist.rho(i, j);
      if (std::isfinite(r)) finite.push_back(r);
    }
  }
  if (finite.empty()) {
    throw CalibrationError(
        "eta_grid_from_percentiles: no pair overlaps anywhere");
  }
  std::sort(finite.begin(), finite.end());

  std::vector<double> grid;
  grid.reserve(k);
  const double m = static_cast<double>(finite.size());
  for (int j = 1; j <= k; ++j) {
    // Linear interpolation between order statistics (R type-7).
    const double q = static_cast<double>(j) / (k + 1);
    const double pos = (m - 1.0) * q;
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const double val = lo + 1 < finite.size()
                           ? finite[lo] + frac * (finite[lo + 1] - finite[lo])
                           : finite[lo];
    grid.push_back(val);
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

TuningResult tune_eta(const ExperimentLog& log, int a, int k,
                      const EstimatorSettings& settings_template,
                      const DistanceMatrix& t1_dist) {
  if (a < 0 || a >= log.num_actions()) throw ArgumentError("tune_eta: action out of range");
  EstimatorSettings check = settings_template;
  check.action = a;
  check.eta = 0.0;
  check.validate();

  auto split = split_halves(log.num_times());
  if (t1_dist.time_window != split.first) {
    throw ArgumentError("tune_eta: distance matrix does not cover the first half");
  }
  long long treated_t1 = 0;
  for (int t : split.first) {
    for (int i = 0; i < log.num_units(); ++i) {
      if (log.treatments(i, t) == a) ++treated_t1;
    }
  }
  if (treated_t1 == 0) {
    throw CalibrationError("tune_eta: action unobserved in the first half");
  }

  TuningResult result;
  result.t1 = split.first;
  result.t2 = split.second;
  result.eta_grid = eta_grid_from_percentiles(t1_dist, k);

  const ResidualSums sums =
      calibration_residuals(log, a, t1_dist, result.eta_grid, split.second);
  if (sums.count == 0) {
    throw CalibrationError("tune_eta: action unobserved in the second half");
  }
  result.losses = sums.loss;

  int best = 0;
  for (int g = 1; g < static_cast<int>(result.losses.size()); ++g) {
    if (result.losses[g] < result.losses[best]) best = g;  // ties keep smaller eta
  }
  result.eta_tuned = result.eta_grid[best];
  result.sigma_hat_sq = result.losses[best] / static_cast<double>(sums.count);
  result.degenerate = sums.n_self > 0;
  return result;
}

TuningResult tune_eta(const ExperimentLog& log, int a, int k,
                      const EstimatorSettings& settings_template) {
  if (a < 0 || a >= log.num_actions()) throw ArgumentError("tune_eta: action out of range");
  const auto split = split_halves(log.num_times());
  return tune_eta(log, a, k, settings_template,
                  pairwise_distance(log, a, split.first));
}

SigmaEstimate estimate_sigma(
    const ExperimentLog& log, int a, double eta,
    const std::pair<std::vector<int>, std::vector<int>>& split) {
  if (a < 0 || a >= log.num_actions()) {
    throw ArgumentError("estimate_sigma: action out of range");
  }
  if (!std::isfinite(eta)) throw ArgumentError("estimate_sigma: eta must be finite");
  if (split.first.empty() || split.second.empty()) {
    throw ArgumentError("estimate_sigma: both split halves must be non-empty");
  }
  const DistanceMatrix dist = pairwise_distance(log, a, split.first);
  const ResidualSums sums =
      calibration_residuals(log, a, dist, {eta}, split.second);
  if (sums.count == 0) {
    throw CalibrationError("estimate_sigma: action unobserved in the second half");
  }
  SigmaEstimate est;
  est.sigma_sq = sums.loss[0] / static_cast<double>(sums.count);
  est.n_entries = sums.count;
  est.n_self = sums.n_self;
  est.degenerate = sums.n_self > 0;
  return est;
}

IterationResult iterate_sigma_eta(const ExperimentLog& log, int a, double eta0,
                                  int max_iters, double tol) {
  if (!(eta0 > 0.0)) throw ArgumentError("iterate_sigma_eta: eta0 must be > 0");
  if (max_iters < 1) throw ArgumentError("iterate_sigma_eta: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ArgumentError("iterate_sigma_eta: tol must be > 0");

  const auto split = split_halves(log.num_times());
  // Distances depend on T1 only; compute once and reuse across iterations.
  const DistanceMatrix dist = pairwise_distance(log, a, split.first);

  IterationResult result;
  double eta = eta0;
  double prev_sigma = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < max_iters; ++it) {
    const ResidualSums sums = calibration_residuals(log, a, dist, {eta}, split.second);
    if (sums.count == 0) {
      throw CalibrationError("iterate_sigma_eta: action unobserved in the second half");
    }
    const double sigma_sq = sums.loss[0] / static_cast<double>(sums.count);
    result.trace.eta.push_back(eta);
    result.trace.sigma_sq.push_back(sigma_sq);
    result.trace.iterations = it + 1;
    if (it > 0 &&
        std::abs(sigma_sq - prev_sigma) <= tol * std::max(prev_sigma, 1e-12)) {
      result.trace.converged = true;
      result.eta = eta;
      result.sigma_hat_sq = sigma_sq;
      return result;
    }
    prev_sigma = sigma_sq;
    eta = 2.0 * sigma_sq;
  }
  result.eta = result.trace.eta.back();
  result.sigma_hat_sq = result.trace.sigma_sq.back();
  return result;
}

}  // namespace seqcf
