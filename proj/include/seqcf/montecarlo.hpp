#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seqcf/config.hpp"

namespace seqcf {

/// One row per replication. Numeric fields are NaN when a replication failed
/// or a metric is unavailable; `error` carries the failure message.
struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  int n_units = 0;
  int n_times = 0;
  double beta = 0.0;
  std::string policy;
  double eta = 0.0;
  double sigma_hat_sq = 0.0;
  double mse = 0.0;
  double median_se = 0.0;
  double pi_coverage = 0.0;
  double pi_width = 0.0;
  double ate_hat = 0.0;
  double ate_ci_cover = 0.0;  // 1.0 covered, 0.0 missed
  double pmin_t = 0.0;
  double wall_ms = 0.0;
  std::string error;
};

/// Fixed CSV column order shared by the CSV and JSON emitters.
extern const std::vector<std::string> kRecordColumns;

struct McSummary {
  int reps = 0;
  int failed = 0;
  std::map<std::string, double> mean;  // per numeric metric, over clean reps
  std::map<std::string, double> sd;
};

struct McResult {
  std::vector<ReplicationRecord> records;
  McSummary summary;
};

/// Runs the full study: per replication simulate, calibrate, estimate and
/// score against the simulation oracle. Replications execute on a worker
/// pool; output is identical for any thread count. A failing replication is
/// recorded and the run continues.
McResult run_montecarlo(const RunConfig& config);

/// Recomputes the summary from rows (used by the self-consistency checks).
McSummary summarize(const std::vector<ReplicationRecord>& records);

/// CSV with a header row, floats at 17 significant digits, RFC-4180 quoting.
std::string records_to_csv(const std::vector<ReplicationRecord>& records);
std::vector<ReplicationRecord> records_from_csv(const std::string& csv);

nlohmann::json records_to_json(const std::vector<ReplicationRecord>& records,
                               const McSummary& summary);
std::vector<ReplicationRecord> records_from_json(const nlohmann::json& j);

/// format "csv": records at `path`, summary JSON at `path` + ".summary.json".
/// format "json": one document holding records and summary.
void emit_results(const std::vector<ReplicationRecord>& records,
                  const McSummary& summary, const std::string& format,
                  const std::string& path);

}  // namespace seqcf
