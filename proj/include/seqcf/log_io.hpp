#pragma once

#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "seqcf/model.hpp"

namespace seqcf {

/// A stored experiment: the log plus optional latent ground truth so oracle
/// metrics can be computed on re-analysis. Real (non-simulated) logs simply
/// omit the latent block.
struct StoredExperiment {
  ExperimentLog log;
  std::optional<LatentState> latent;
};

/// Serialization uses the documented "seqcf-log-v1" schema: treatments and
/// outcomes as [N][T] arrays, assign_probs as [N][T][A], latent factors as
/// [N][A][d] / [T][A][d].
nlohmann::json stored_experiment_to_json(const StoredExperiment& stored);
StoredExperiment stored_experiment_from_json(const nlohmann::json& j);

void write_stored_experiment(const StoredExperiment& stored, const std::string& path);
StoredExperiment read_stored_experiment(const std::string& path);

}  // namespace seqcf
