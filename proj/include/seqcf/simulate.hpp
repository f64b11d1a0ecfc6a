#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqcf/model.hpp"
#include "seqcf/rng.hpp"

namespace seqcf {

/// Distribution of one family of latent factors.
///
/// Discrete: uniform over the rows of `support` (M x d, pairwise distinct).
/// UniformBox: coordinates drawn independently, coordinate k in [lo[k], hi[k]].
struct FactorSpec {
  enum class Kind { Discrete, UniformBox };

  Kind kind = Kind::UniformBox;
  Eigen::MatrixXd support;  // discrete only
  Eigen::VectorXd lo, hi;   // uniform-box only

  static FactorSpec discrete(Eigen::MatrixXd points);
  static FactorSpec uniform_box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  /// The unit cube [0,1]^d.
  static FactorSpec unit_cube(int d);

  int dim() const;
  void validate() const;
  /// Tight norm bound over the support (max row norm / farthest box corner).
  double norm_bound() const;
  /// Mean of the distribution.
  Eigen::VectorXd mean() const;
  /// Second moment matrix E[x x^T].
  Eigen::MatrixXd second_moment() const;
};

/// Joint latent specification. Per-action overrides allow experiments where
/// the arms have different factor distributions; when empty, `unit` / `time`
/// apply to every action.
struct LatentSpec {
  int d = 1;
  FactorSpec unit;
  FactorSpec time;
  std::vector<FactorSpec> per_action_unit;  // empty or size |A|
  std::vector<FactorSpec> per_action_time;  // empty or size |A|
  bool shared_across_actions = false;       // unit factors identical over a
  double c_u = 0.0;  // 0 -> derived from the spec
  double c_v = 0.0;
  std::string mean_fn = "bilinear";

  const FactorSpec& unit_spec(int a) const;
  const FactorSpec& time_spec(int a) const;
  double unit_norm_bound(int action_count) const;
  double time_norm_bound(int action_count) const;
  void validate(int action_count) const;
};

/// Noise model: mean zero, variance exactly sigma^2, |eps| <= c_eps a.s.
struct NoiseSpec {
  enum class Dist { TruncatedNormal, Uniform, RademacherScaled };

  double sigma = 1.0;
  double c_eps = 4.0;
  Dist distribution = Dist::TruncatedNormal;

  void validate() const;
};

/// Treatment policies. All adaptive kinds emit uniform rows at t = 1.
struct PolicySpec {
  enum class Kind { Constant, EpsGreedyUnit, EpsGreedyPooled, ThompsonPooled };

  Kind kind = Kind::Constant;
  // Constant: explicit probability vector over actions (must sum to 1).
  Eigen::VectorXd const_probs;
  // Epsilon-greedy: eps_t = max(eps_floor, t^-beta), t counted from 1.
  double beta = 0.0;
  double eps_floor = 0.0;
  // Thompson (Gaussian-Gaussian, pooled): prior N(prior_mean, prior_var) per
  // arm, observation variance obs_var.
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double obs_var = 1.0;
  // Seeds the Monte Carlo probability evaluation for Thompson with |A| > 2,
  // so logged probabilities are reproducible from the history alone.
  std::uint64_t policy_seed = 0;

  void validate(int action_count) const;
  double epsilon_at(int t) const;  // t is 1-based
};

/// Outcomes/treatments observed strictly before time t (0-based column count
/// = t_count). Policies may only read this view.
struct HistoryView {
  const Eigen::MatrixXi& treatments;
  const Eigen::MatrixXd& outcomes;
  int t_count = 0;
};

/// Draws unit and time factors i.i.d. per spec. Deterministic in `key`.
LatentState sample_latent(const LatentSpec& spec, int n_units, int n_times,
                          int action_count, std::uint64_t key);

/// Assignment probability matrix [N x |A|] for time t (1-based), as a
/// measurable function of the history. Adaptive kinds with empty history
/// return uniform rows.
Eigen::MatrixXd policy_step(const PolicySpec& spec, const HistoryView& history,
                            int t, int action_count);

/// Runs the full data-generating mechanism: for t = 1..T compute policy
/// probabilities, sample treatments independently across units, observe
/// Y = theta + eps. Bit-identical output for identical (key, inputs).
ExperimentLog run_experiment(const LatentState& latent, const NoiseSpec& noise,
                             const PolicySpec& policy, std::uint64_t key);

/// Base scale of the truncated normal whose truncation to [-c, c] has
/// variance exactly sigma^2 (solved numerically to 1e-10).
double truncated_normal_base_scale(double sigma, double c);

}  // namespace seqcf
