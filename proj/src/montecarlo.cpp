#include "seqcf/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "seqcf/calibrate.hpp"
#include "seqcf/errors.hpp"
#include "seqcf/inference.hpp"
#include "seqcf/log_io.hpp"

namespace seqcf {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

/// Analytic population mean E<u, v> for the target action, available for the
/// bilinear mean function (factors are independent).
double analytic_population_mean(const RunConfig& cfg) {
  if (cfg.latent.mean_fn != "bilinear") return kNaN;
  const Eigen::VectorXd mu = cfg.latent.unit_spec(cfg.action).mean();
  const Eigen::VectorXd mv = cfg.latent.time_spec(cfg.action).mean();
  return mu.dot(mv);
}

ReplicationRecord run_one_rep(const RunConfig& cfg, int rep) {
  ReplicationRecord rec;
  rec.rep = rep;
  rec.seed = derive_key(cfg.seed, static_cast<std::uint64_t>(rep));
  rec.n_units = cfg.n_units;
  rec.n_times = cfg.n_times;
  rec.beta = cfg.policy.beta;
  rec.policy = [&] {
    switch (cfg.policy.kind) {
      case PolicySpec::Kind::Constant: return "constant";
      case PolicySpec::Kind::EpsGreedyUnit: return "epsilon-greedy-unit";
      case PolicySpec::Kind::EpsGreedyPooled: return "epsilon-greedy-pooled";
      case PolicySpec::Kind::ThompsonPooled: return "thompson-pooled";
    }
    return "?";
  }();
  rec.eta = kNaN;
  rec.sigma_hat_sq = kNaN;
  rec.mse = kNaN;
  rec.median_se = kNaN;
  rec.pi_coverage = kNaN;
  rec.pi_width = kNaN;
  rec.ate_hat = kNaN;
  rec.ate_ci_cover = kNaN;
  rec.pmin_t = kNaN;

  const auto start = std::chrono::steady_clock::now();
  try {
    const std::uint64_t key = rec.seed;
    const LatentState latent =
        sample_latent(cfg.latent, cfg.n_units, cfg.n_times, cfg.actions, key);
    const MeanTensor theta = build_mean_tensor(latent);
    const ExperimentLog log = run_experiment(latent, cfg.noise, cfg.policy, key);
    const int a = cfg.action;

    // One pass yields the first-half window (calibration) and full-window
    // (estimation) distances. Calibration supplies sigma-hat for intervals
    // and, when requested, the tuned threshold.
    double sigma_hat = kNaN;
    double eta = kNaN;
    DistanceMatrix dist;
    if (cfg.n_times >= 2) {
      DistanceSplit split_dist =
          pairwise_distance_split(log, a, cfg.n_times / 2);
      const TuningResult tuning =
          tune_eta(log, a, cfg.grid_k, cfg.estimator_settings(0.0), split_dist.head);
      rec.sigma_hat_sq = tuning.sigma_hat_sq;
      sigma_hat = std::sqrt(std::max(0.0, tuning.sigma_hat_sq));
      if (cfg.eta_source == EtaSource::Tuned) eta = tuning.eta_tuned;
      dist = std::move(split_dist.full);
    } else {
      dist = pairwise_distance(log, a, all_times(cfg.n_times));
    }
    if (cfg.eta_source == EtaSource::Fixed) eta = cfg.fixed_eta;
    if (cfg.eta_source == EtaSource::Schedule) {
      eta = eta_schedule(cfg.schedule_kind, cfg.theory_params(), cfg.n_units,
                         cfg.n_times, cfg.policy.beta);
    }
    if (!std::isfinite(eta)) {
      throw EstimationError("no usable eta (tuning requires T >= 2)");
    }
    rec.eta = eta;
    const EstimatorSettings settings = cfg.estimator_settings(eta);
    const std::vector<Estimate> est = estimate_all(log, dist, settings, key);

    // Oracle metrics against the simulated means.
    const std::size_t cells = est.size();
    std::vector<double> sq(cells);
    for (int i = 0; i < cfg.n_units; ++i) {
      for (int t = 0; t < cfg.n_times; ++t) {
        const std::size_t cell = static_cast<std::size_t>(i) * cfg.n_times + t;
        const double d = est[cell].value - theta.at(i, t, a);
        sq[cell] = d * d;
      }
    }
    rec.mse = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(cells);
    std::vector<double> sq_copy = sq;
    const std::size_t mid = sq_copy.size() / 2;
    std::nth_element(sq_copy.begin(), sq_copy.begin() + mid, sq_copy.end());
    double median = sq_copy[mid];
    if (sq_copy.size() % 2 == 0) {
      const double lower = *std::max_element(sq_copy.begin(), sq_copy.begin() + mid);
      median = 0.5 * (median + lower);
    }
    rec.median_se = median;

    // Prediction-interval coverage over a random sample of neighbor-based
    // entries (the interval is defined only there).
    if (std::isfinite(sigma_hat)) {
      std::vector<std::size_t> eligible;
      eligible.reserve(cells);
      for (std::size_t cell = 0; cell < cells; ++cell) {
        if (est[cell].fallback == Fallback::None) eligible.push_back(cell);
      }
      if (!eligible.empty()) {
        RngStream pi_rng(key, StreamRole::Generic, 1);
        const int m = std::min<int>(cfg.pi_sample, static_cast<int>(eligible.size()));
        const std::vector<int> chosen =
            pi_rng.sample_without_replacement(static_cast<int>(eligible.size()), m);
        int covered = 0;
        double width_sum = 0.0;
        for (int pick : chosen) {
          const std::size_t cell = eligible[static_cast<std::size_t>(pick)];
          const int i = static_cast<int>(cell / cfg.n_times);
          const int t = static_cast<int>(cell % cfg.n_times);
          const IntervalEstimate iv =
              prediction_interval(est[cell], sigma_hat, cfg.alpha);
          if (iv.covers(theta.at(i, t, a))) ++covered;
          width_sum += 2.0 * iv.half_width;
        }
        rec.pi_coverage = static_cast<double>(covered) / m;
        rec.pi_width = width_sum / m;
      }
    }

    rec.ate_hat = population_estimate(log, est, a);
    const double truth = analytic_population_mean(cfg);
    if (std::isfinite(truth)) {
      RngStream ci_rng(key, StreamRole::SubsampleCi);
      const IntervalEstimate ci =
          subsample_ci(est, cfg.n_units, cfg.n_times, cfg.effective_subsample_k(),
                       cfg.alpha, ci_rng);
      rec.ate_ci_cover = ci.covers(truth) ? 1.0 : 0.0;
    }
    rec.pmin_t = realized_pmin(log, a, cfg.n_times);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

double record_field(const ReplicationRecord& r, const std::string& name) {
  if (name == "eta") return r.eta;
  if (name == "sigma_hat_sq") return r.sigma_hat_sq;
  if (name == "mse") return r.mse;
  if (name == "median_se") return r.median_se;
  if (name == "pi_coverage") return r.pi_coverage;
  if (name == "pi_width") return r.pi_width;
  if (name == "ate_hat") return r.ate_hat;
  if (name == "ate_ci_cover") return r.ate_ci_cover;
  if (name == "pmin_T") return r.pmin_t;
  if (name == "wall_ms") return r.wall_ms;
  return kNaN;
}

const std::vector<std::string> kMetricNames = {
    "eta",     "sigma_hat_sq", "mse",     "median_se", "pi_coverage",
    "pi_width", "ate_hat",     "ate_ci_cover", "pmin_T", "wall_ms"};

}  // namespace

const std::vector<std::string> kRecordColumns = {
    "rep",         "seed",       "N",        "T",            "beta",
    "policy",      "eta",        "sigma_hat_sq", "mse",      "median_se",
    "pi_coverage", "pi_width",   "ate_hat",  "ate_ci_cover", "pmin_T",
    "wall_ms",     "error"};

McResult run_montecarlo(const RunConfig& config) {
  config.validate();
  McResult result;
  result.records.resize(config.reps);

  std::atomic<int> next{0};
  auto work = [&] {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= config.reps) break;
      result.records[r] = run_one_rep(config, r);
    }
  };
  const int n_workers = std::min(config.threads, config.reps);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  result.summary = summarize(result.records);
  return result;
}

McSummary summarize(const std::vector<ReplicationRecord>& records) {
  McSummary summary;
  summary.reps = static_cast<int>(records.size());
  for (const auto& r : records) {
    if (!r.error.empty()) ++summary.failed;
  }
  for (const auto& name : kMetricNames) {
    double sum = 0.0;
    long long n = 0;
    for (const auto& r : records) {
      if (!r.error.empty()) continue;
      const double v = record_field(r, name);
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
    if (n == 0) {
      summary.mean[name] = kNaN;
      summary.sd[name] = kNaN;
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : records) {
      if (!r.error.empty()) continue;
      const double v = record_field(r, name);
      if (std::isfinite(v)) {
        ss += (v - mean) * (v - mean);
      }
    }
    summary.mean[name] = mean;
    summary.sd[name] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  }
  return summary;
}

std::string records_to_csv(const std::vector<ReplicationRecord>& records) {
  std::string out;
  for (std::size_t c = 0; c < kRecordColumns.size(); ++c) {
    if (c) out += ',';
    out += kRecordColumns[c];
  }
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.rep);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.n_units);
    out += ',';
    out += std::to_string(r.n_times);
    out += ',';
    out += format_double(r.beta);
    out += ',';
    out += csv_quote(r.policy);
    for (const char* name : {"eta", "sigma_hat_sq", "mse", "median_se",
                             "pi_coverage", "pi_width", "ate_hat",
                             "ate_ci_cover", "pmin_T", "wall_ms"}) {
      out += ',';
      out += format_double(record_field(r, name));
    }
    out += ',';
    out += csv_quote(r.error);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t p = 0; p < line.size(); ++p) {
    const char c = line[p];
    if (quoted) {
      if (c == '"') {
        if (p + 1 < line.size() && line[p + 1] == '"') {
          cur += '"';
          ++p;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

void assign_record_field(ReplicationRecord& r, const std::string& name,
                         const std::string& value) {
  if (name == "rep") r.rep = std::stoi(value);
  else if (name == "seed") r.seed = std::stoull(value);
  else if (name == "N") r.n_units = std::stoi(value);
  else if (name == "T") r.n_times = std::stoi(value);
  else if (name == "beta") r.beta = std::strtod(value.c_str(), nullptr);
  else if (name == "policy") r.policy = value;
  else if (name == "eta") r.eta = std::strtod(value.c_str(), nullptr);
  else if (name == "sigma_hat_sq") r.sigma_hat_sq = std::strtod(value.c_str(), nullptr);
  else if (name == "mse") r.mse = std::strtod(value.c_str(), nullptr);
  else if (name == "median_se") r.median_se = std::strtod(value.c_str(), nullptr);
  else if (name == "pi_coverage") r.pi_coverage = std::strtod(value.c_str(), nullptr);
  else if (name == "pi_width") r.pi_width = std::strtod(value.c_str(), nullptr);
  else if (name == "ate_hat") r.ate_hat = std::strtod(value.c_str(), nullptr);
  else if (name == "ate_ci_cover") r.ate_ci_cover = std::strtod(value.c_str(), nullptr);
  else if (name == "pmin_T") r.pmin_t = std::strtod(value.c_str(), nullptr);
  else if (name == "wall_ms") r.wall_ms = std::strtod(value.c_str(), nullptr);
  else if (name == "error") r.error = value;
  else throw IoError("unknown CSV column: " + name);
}

json number_or_null(double x) {
  if (std::isfinite(x)) return json(x);
  return json(nullptr);
}

double json_number(const json& v) {
  if (v.is_null()) return kNaN;
  return v.get<double>();
}

}  // namespace

std::vector<ReplicationRecord> records_from_csv(const std::string& csv) {
  std::vector<ReplicationRecord> records;
  std::size_t pos = 0;
  bool header = true;
  std::vector<std::string> columns;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string::npos) end = csv.size();
    std::string line = csv.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (header) {
      columns = fields;
      header = false;
      continue;
    }
    if (fields.size() != columns.size()) throw IoError("CSV row width mismatch");
    ReplicationRecord r;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      assign_record_field(r, columns[c], fields[c]);
    }
    records.push_back(std::move(r));
  }
  return records;
}

json records_to_json(const std::vector<ReplicationRecord>& records,
                     const McSummary& summary) {
  json rows = json::array();
  for (const auto& r : records) {
    json row;
    row["rep"] = r.rep;
    row["seed"] = r.seed;
    row["N"] = r.n_units;
    row["T"] = r.n_times;
    row["beta"] = number_or_null(r.beta);
    row["policy"] = r.policy;
    row["eta"] = number_or_null(r.eta);
    row["sigma_hat_sq"] = number_or_null(r.sigma_hat_sq);
    row["mse"] = number_or_null(r.mse);
    row["median_se"] = number_or_null(r.median_se);
    row["pi_coverage"] = number_or_null(r.pi_coverage);
    row["pi_width"] = number_or_null(r.pi_width);
    row["ate_hat"] = number_or_null(r.ate_hat);
    row["ate_ci_cover"] = number_or_null(r.ate_ci_cover);
    row["pmin_T"] = number_or_null(r.pmin_t);
    row["wall_ms"] = number_or_null(r.wall_ms);
    row["error"] = r.error;
    rows.push_back(std::move(row));
  }
  json s;
  s["reps"] = summary.reps;
  s["failed"] = summary.failed;
  json means, sds;
  for (const auto& [k, v] : summary.mean) means[k] = number_or_null(v);
  for (const auto& [k, v] : summary.sd) sds[k] = number_or_null(v);
  s["mean"] = means;
  s["sd"] = sds;
  json out;
  out["records"] = rows;
  out["summary"] = s;
  return out;
}

std::vector<ReplicationRecord> records_from_json(const json& j) {
  const json& rows = j.contains("records") ? j["records"] : j;
  std::vector<ReplicationRecord> records;
  for (const auto& row : rows) {
    ReplicationRecord r;
    r.rep = row.at("rep").get<int>();
    r.seed = row.at("seed").get<std::uint64_t>();
    r.n_units = row.at("N").get<int>();
    r.n_times = row.at("T").get<int>();
    r.beta = json_number(row.at("beta"));
    r.policy = row.at("policy").get<std::string>();
    r.eta = json_number(row.at("eta"));
    r.sigma_hat_sq = json_number(row.at("sigma_hat_sq"));
    r.mse = json_number(row.at("mse"));
    r.median_se = json_number(row.at("median_se"));
    r.pi_coverage = json_number(row.at("pi_coverage"));
    r.pi_width = json_number(row.at("pi_width"));
    r.ate_hat = json_number(row.at("ate_hat"));
    r.ate_ci_cover = json_number(row.at("ate_ci_cover"));
    r.pmin_t = json_number(row.at("pmin_T"));
    r.wall_ms = json_number(row.at("wall_ms"));
    r.error = row.at("error").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

void emit_results(const std::vector<ReplicationRecord>& records,
                  const McSummary& summary, const std::string& format,
                  const std::string& path) {
  if (format == "csv") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << records_to_csv(records);
    if (!out) throw IoError("write failed: " + path);
    const std::string spath = path + ".summary.json";
    std::ofstream sout(spath);
    if (!sout) throw IoError("cannot open for writing: " + spath);
    json dummy = records_to_json({}, summary);
    sout << dummy["summary"].dump(2) << '\n';
    if (!sout) throw IoError("write failed: " + spath);
    return;
  }
  if (format == "json") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << records_to_json(records, summary).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
    return;
  }
  throw ArgumentError("emit_results: unknown format '" + format + "'");
}

}  // namespace seqcf
