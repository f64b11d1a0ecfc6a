#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "seqcf/model.hpp"

namespace seqcf {

/// Estimator hyper-parameters for one action.
struct EstimatorSettings {
  double eta = 0.0;              // neighbor threshold
  int action = 0;                // target action a
  std::optional<int> cap = {};   // L: down-sample neighbor sets above this
  double alpha = 0.05;           // interval level 1 - alpha
  std::optional<int> subsample_k = {};  // K for the population CI

  void validate() const;
};

/// Symmetric unit-pair distances for one action over a time window.
/// rho(i, j) = +inf exactly when the pair has no common treatment time.
struct DistanceMatrix {
  Eigen::MatrixXd rho;
  Eigen::MatrixXi overlap;
  std::vector<int> time_window;  // 0-based, ascending

  int num_units() const { return static_cast<int>(rho.rows()); }
};

enum class Fallback { None, SelfObservation, ColumnMean, GlobalMean };

const char* fallback_name(Fallback f);

struct Estimate {
  double value = 0.0;
  int neighbor_count = 0;  // min(n-hat, cap) when capped
  Fallback fallback = Fallback::None;
};

std::vector<int> all_times(int t_count);

/// Mean squared outcome distance over times in `window` where both units
/// received action a. Per-pair sums run in ascending t order, so results are
/// bit-reproducible for any thread count.
DistanceMatrix pairwise_distance(const ExperimentLog& log, int a,
                                 const std::vector<int>& window);

struct DistanceSplit {
  DistanceMatrix head;  // window = first t1_count times
  DistanceMatrix full;  // window = all times
};

/// Computes the first-half and full-window distances in one pass; the head
/// matrix is the sequential prefix of the full accumulation, so both equal
/// their directly-computed counterparts bit for bit.
DistanceSplit pairwise_distance_split(const ExperimentLog& log, int a,
                                      int t1_count);

/// { j != i : rho(i, j) <= eta and A_{j,t} = a }, ascending.
std::vector<int> neighbor_set(const DistanceMatrix& dist,
                              const ExperimentLog& log, int i, int t,
                              const EstimatorSettings& settings);

/// Neighbor average, falling back when the set is empty: own observation if
/// treated, else the column mean over treated units, else the global mean of
/// all treated entries. `cell_key` seeds the down-sampling stream when a cap
/// is set (derived per (i, t), scheduling-independent).
Estimate nn_estimate(const ExperimentLog& log, const DistanceMatrix& dist,
                     int i, int t, const EstimatorSettings& settings,
                     std::uint64_t cell_key = 0);

/// nn_estimate at every (i, t), row-major N x T, one pass over a shared
/// DistanceMatrix. Throws EstimationError when action a never appears.
std::vector<Estimate> estimate_all(const ExperimentLog& log,
                                   const DistanceMatrix& dist,
                                   const EstimatorSettings& settings,
                                   std::uint64_t cell_key = 0);

}  // namespace seqcf
