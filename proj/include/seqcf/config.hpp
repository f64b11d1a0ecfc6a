#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "seqcf/estimator.hpp"
#include "seqcf/simulate.hpp"
#include "seqcf/theory.hpp"

namespace seqcf {

enum class EtaSource { Fixed, Tuned, Schedule };

std::string eta_source_name(EtaSource s);

/// Full study configuration. Parsed from strict JSON: unknown keys are
/// rejected (with a nearest-key suggestion), validation failures carry the
/// offending field path.
struct RunConfig {
  // experiment
  int n_units = 100;
  int n_times = 64;
  int actions = 2;
  LatentSpec latent;
  NoiseSpec noise;
  PolicySpec policy;

  // estimator
  int action = 0;
  EtaSource eta_source = EtaSource::Tuned;
  double fixed_eta = 0.0;
  ScheduleKind schedule_kind = ScheduleKind::Discrete;
  int grid_k = 20;
  std::optional<int> cap;
  std::optional<int> subsample_k;  // default floor(sqrt(NT)) when unset
  double alpha = 0.05;
  int pi_sample = 50;

  // replication
  int reps = 1;
  std::uint64_t seed = 0;
  int threads = 1;

  // output
  std::string out_path = "results.csv";
  std::string format = "csv";

  int effective_subsample_k() const;
  EstimatorSettings estimator_settings(double eta) const;
  /// Bound constants implied by this configuration (for schedules and the
  /// `bound` diagnostics): c_u/c_v from the latent spec, lambda_a from the
  /// analytic Sigma_v of the target arm's time-factor distribution, p_min
  /// from the policy.
  TheoryParams theory_params() const;
  void validate() const;
};

/// Parses and validates; applies SEQCF_SEED / SEQCF_THREADS overrides.
RunConfig load_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& j);

/// Normalized dump with every default filled in.
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace seqcf
