#include "seqcf/log_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "seqcf/errors.hpp"

namespace seqcf {

namespace {

using nlohmann::json;

constexpr const char* kSchema = "seqcf-log-v1";

}  // namespace

json stored_experiment_to_json(const StoredExperiment& stored) {
  const ExperimentLog& log = stored.log;
  const int n = log.num_units();
  const int t_count = log.num_times();
  const int a_count = log.num_actions();

  json j;
  j["schema"] = kSchema;
  j["n_actions"] = a_count;
  j["noise_sd"] = log.noise_sd;
  j["noise_bound"] = log.noise_bound;

  json treatments = json::array();
  json outcomes = json::array();
  json probs = json::array();
  for (int i = 0; i < n; ++i) {
    json trow = json::array();
    json yrow = json::array();
    json prow = json::array();
    for (int t = 0; t < t_count; ++t) {
      trow.push_back(log.treatments(i, t));
      yrow.push_back(log.outcomes(i, t));
      json cell = json::array();
      for (int a = 0; a < a_count; ++a) cell.push_back(log.assign_probs[a](i, t));
      prow.push_back(cell);
    }
    treatments.push_back(trow);
    outcomes.push_back(yrow);
    probs.push_back(prow);
  }
  j["treatments"] = treatments;
  j["outcomes"] = outcomes;
  j["assign_probs"] = probs;

  if (stored.latent) {
    const LatentState& lat = *stored.latent;
    json latent;
    latent["mean_fn"] = lat.mean_fn;
    const int d = lat.dim();
    json uf = json::array();
    for (int i = 0; i < lat.num_units(); ++i) {
      json per_action = json::array();
      for (int a = 0; a < a_count; ++a) {
        json vec = json::array();
        for (int k = 0; k < d; ++k) vec.push_back(lat.unit_factors[a](i, k));
        per_action.push_back(vec);
      }
      uf.push_back(per_action);
    }
    json vf = json::array();
    for (int t = 0; t < lat.num_times(); ++t) {
      json per_action = json::array();
      for (int a = 0; a < a_count; ++a) {
        json vec = json::array();
        for (int k = 0; k < d; ++k) vec.push_back(lat.time_factors[a](t, k));
        per_action.push_back(vec);
      }
      vf.push_back(per_action);
    }
    latent["unit_factors"] = uf;
    latent["time_factors"] = vf;
    j["latent"] = latent;
  }
  return j;
}

StoredExperiment stored_experiment_from_json(const json& j) {
  if (!j.is_object() || j.value("schema", "") != kSchema) {
    throw IoError("stored experiment: missing or unknown schema (expected seqcf-log-v1)");
  }
  StoredExperiment stored;
  ExperimentLog& log = stored.log;
  const int a_count = j.at("n_actions").get<int>();
  if (a_count < 1) throw IoError("stored experiment: n_actions must be >= 1");
  log.noise_sd = j.value("noise_sd", 0.0);
  log.noise_bound = j.value("noise_bound", 0.0);

  const auto& treatments = j.at("treatments");
  const auto& outcomes = j.at("outcomes");
  const auto& probs = j.at("assign_probs");
  const int n = static_cast<int>(treatments.size());
  if (n < 1) throw IoError("stored experiment: empty treatments");
  const int t_count = static_cast<int>(treatments[0].size());

  log.treatments.resize(n, t_count);
  log.outcomes.resize(n, t_count);
  log.assign_probs.assign(a_count, Eigen::MatrixXd::Zero(n, t_count));
  if (static_cast<int>(outcomes.size()) != n || static_cast<int>(probs.size()) != n) {
    throw IoError("stored experiment: array row counts differ");
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(treatments[i].size()) != t_count ||
        static_cast<int>(outcomes[i].size()) != t_count ||
        static_cast<int>(probs[i].size()) != t_count) {
      throw IoError("stored experiment: ragged rows");
    }
    for (int t = 0; t < t_count; ++t) {
      log.treatments(i, t) = treatments[i][t].get<int>();
      log.outcomes(i, t) = outcomes[i][t].get<double>();
      if (static_cast<int>(probs[i][t].size()) != a_count) {
        throw IoError("stored experiment: probability cell size differs from n_actions");
      }
      for (int a = 0; a < a_count; ++a) {
        log.assign_probs[a](i, t) = probs[i][t][a].get<double>();
      }
    }
  }
  log.validate();

  if (j.contains("latent") && !j["latent"].is_null()) {
    const auto& lat = j["latent"];
    LatentState state;
    state.mean_fn = lat.value("mean_fn", "bilinear");
    const auto& uf = lat.at("unit_factors");
    const auto& vf = lat.at("time_factors");
    if (static_cast<int>(uf.size()) != n || static_cast<int>(vf.size()) != t_count) {
      throw IoError("stored experiment: latent factor counts differ from the log");
    }
    const int d = static_cast<int>(uf[0][0].size());
    state.unit_factors.assign(a_count, Eigen::MatrixXd::Zero(n, d));
    state.time_factors.assign(a_count, Eigen::MatrixXd::Zero(t_count, d));
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < a_count; ++a) {
        for (int k = 0; k < d; ++k) {
          state.unit_factors[a](i, k) = uf[i][a][k].get<double>();
        }
      }
    }
    for (int t = 0; t < t_count; ++t) {
      for (int a = 0; a < a_count; ++a) {
        for (int k = 0; k < d; ++k) {
          state.time_factors[a](t, k) = vf[t][a][k].get<double>();
        }
      }
    }
    stored.latent = std::move(state);
  }
  return stored;
}

void write_stored_experiment(const StoredExperiment& stored, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << stored_experiment_to_json(stored).dump();
  out << '\n';
  if (!out) throw IoError("write failed: " + path);
}

StoredExperiment read_stored_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("log parse error in " + path + ": " + e.what());
  }
  return stored_experiment_from_json(j);
}

}  // namespace seqcf
