#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "seqcf/estimator.hpp"
#include "seqcf/model.hpp"

namespace seqcf {

/// Two-way time split used for tuning: T1 = first floor(T/2) points, T2 the
/// rest. Both 0-based, ascending.
std::pair<std::vector<int>, std::vector<int>> split_halves(int t_count);

/// Candidate thresholds: the k empirical percentiles (linear interpolation
/// between order statistics) of the finite upper-triangular distances at
/// q = 100*j/(k+1), deduplicated ascending. All-infinite distances ->
/// CalibrationError.
std::vector<double> eta_grid_from_percentiles(const DistanceMatrix& dist, int k);

struct TuningResult {
  std::vector<double> eta_grid;
  std::vector<double> losses;  // same length as eta_grid
  double eta_tuned = 0.0;
  double sigma_hat_sq = 0.0;
  std::vector<int> t1, t2;
  bool degenerate = false;  // some residuals collapsed to the self fallback
};

/// Data-split threshold tuning: distances on T1 only, loss on treated T2
/// entries, argmin over the percentile grid (ties -> smallest eta), noise
/// variance estimated at the selected threshold.
///
/// Residuals compare Y_{i,t} against the estimate built without unit i's own
/// observation: the neighbor average when the set is non-empty, otherwise the
/// leave-one-out column mean. Entries with no other treated unit anywhere in
/// the column contribute zero residual and flip the degenerate flag. Neighbor
/// caps do not apply during calibration.
TuningResult tune_eta(const ExperimentLog& log, int a, int k,
                      const EstimatorSettings& settings_template);

/// tune_eta against a first-half distance matrix the caller already holds
/// (it must cover exactly split_halves(T).first).
TuningResult tune_eta(const ExperimentLog& log, int a, int k,
                      const EstimatorSettings& settings_template,
                      const DistanceMatrix& t1_dist);

struct SigmaEstimate {
  double sigma_sq = 0.0;
  long long n_entries = 0;     // treated entries in T2
  long long n_self = 0;        // entries that collapsed to the self fallback
  bool degenerate = false;
};

/// Noise variance at a fixed threshold: mean squared residual over treated T2
/// entries, with distances from the T1 window.
SigmaEstimate estimate_sigma(const ExperimentLog& log, int a, double eta,
                             const std::pair<std::vector<int>, std::vector<int>>& split);

struct IterationTrace {
  std::vector<double> eta;       // eta used at each step
  std::vector<double> sigma_sq;  // estimate produced at that eta
  bool converged = false;
  int iterations = 0;
};

struct IterationResult {
  double eta = 0.0;
  double sigma_hat_sq = 0.0;
  IterationTrace trace;
};

/// Alternating refinement: sigma^2 <- estimate_sigma(eta), eta <- 2*sigma^2,
/// until the estimate moves by at most tol (relative) or max_iters is hit.
/// Non-convergence is reported in the trace, not fatal.
IterationResult iterate_sigma_eta(const ExperimentLog& log, int a, double eta0,
                                  int max_iters, double tol);

}  // namespace seqcf
