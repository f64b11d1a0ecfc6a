#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace seqcf {

/// Finite treatment set; actions are 0-based indices 0..count-1.
struct ActionSet {
  int count = 1;

  explicit ActionSet(int n);
};

/// Unit and time latent factors for every action, plus the mean-function
/// identifier that maps factor pairs to counterfactual means.
///
/// unit_factors[a] is N x d, time_factors[a] is T x d. Immutable after
/// construction; safe for concurrent reads.
struct LatentState {
  std::vector<Eigen::MatrixXd> unit_factors;
  std::vector<Eigen::MatrixXd> time_factors;
  std::string mean_fn = "bilinear";

  int num_units() const { return static_cast<int>(unit_factors.at(0).rows()); }
  int num_times() const { return static_cast<int>(time_factors.at(0).rows()); }
  int num_actions() const { return static_cast<int>(unit_factors.size()); }
  int dim() const { return static_cast<int>(unit_factors.at(0).cols()); }

  /// Checks dimension consistency and the configured norm bounds.
  void validate(double c_u, double c_v) const;
};

/// Counterfactual means theta[i][t][a], stored as one N x T matrix per action.
struct MeanTensor {
  std::vector<Eigen::MatrixXd> theta;

  int num_units() const { return static_cast<int>(theta.at(0).rows()); }
  int num_times() const { return static_cast<int>(theta.at(0).cols()); }
  int num_actions() const { return static_cast<int>(theta.size()); }
  double at(int i, int t, int a) const { return theta[a](i, t); }
};

/// A completed experiment: realized treatments, observed outcomes, and the
/// assignment probabilities the policy reported at each step.
struct ExperimentLog {
  Eigen::MatrixXi treatments;                  // N x T, entries in [0, A)
  Eigen::MatrixXd outcomes;                    // N x T
  std::vector<Eigen::MatrixXd> assign_probs;   // per action, N x T
  double noise_bound = 0.0;                    // c_eps
  double noise_sd = 0.0;                       // sigma

  int num_units() const { return static_cast<int>(treatments.rows()); }
  int num_times() const { return static_cast<int>(treatments.cols()); }
  int num_actions() const { return static_cast<int>(assign_probs.size()); }

  /// Verifies probability rows sum to one (1e-12) and indices are in range.
  void validate() const;
};

using MeanFn =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Looks up a mean function by identifier. Registered: "bilinear",
/// "norm-distance", "sigmoid-inner-product". Unknown id -> ConfigError.
MeanFn lookup_mean_fn(const std::string& id);

/// theta[i][t][a] = f_a(u_i^(a), v_t^(a)); bilinear is the exact inner
/// product.
MeanTensor build_mean_tensor(const LatentState& latent);

/// Minimum realized assignment probability of action a over all units and
/// the first t time points (t is a 1-based count, 1 <= t <= T). Non-increasing
/// in t for every log.
double realized_pmin(const ExperimentLog& log, int a, int t);

}  // namespace seqcf
