#include "seqcf/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "seqcf/errors.hpp"

namespace seqcf {

namespace {

using nlohmann::json;

int edit_distance(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path.empty() ? msg : path + ": " + msg);
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    std::string best;
    int best_d = 3;
    for (const auto& cand : allowed) {
      const int d = edit_distance(key, cand);
      if (d < best_d) {
        best_d = d;
        best = cand;
      }
    }
    std::string msg = "unknown key '" + key + "'";
    if (!best.empty()) msg += "; did you mean '" + best + "'?";
    fail(path, msg);
  }
}

double get_number(const json& obj, const std::string& key, double fallback,
                  const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback,
            const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) fail(path + "." + key, "expected an integer");
  return obj[key].get<int>();
}

std::string get_string(const json& obj, const std::string& key,
                       const std::string& fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) fail(path + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

Eigen::VectorXd vector_or_scalar(const json& v, int d, const std::string& path) {
  Eigen::VectorXd out(d);
  if (v.is_number()) {
    out.setConstant(v.get<double>());
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != d) {
    fail(path, "expected a number or an array of length d");
  }
  for (int k = 0; k < d; ++k) {
    if (!v[k].is_number()) fail(path, "expected numeric entries");
    out[k] = v[k].get<double>();
  }
  return out;
}

FactorSpec parse_factor(const json& j, int d, const std::string& path) {
  check_keys(j, {"kind", "support", "low", "high"}, path);
  const std::string kind = get_string(j, "kind", "uniform", path);
  if (kind == "discrete") {
    if (!j.contains("support") || !j["support"].is_array() || j["support"].empty()) {
      fail(path + ".support", "discrete factors need a non-empty support array");
    }
    const auto& sup = j["support"];
    Eigen::MatrixXd points(sup.size(), d);
    for (std::size_t r = 0; r < sup.size(); ++r) {
      if (!sup[r].is_array() || static_cast<int>(sup[r].size()) != d) {
        fail(path + ".support", "each support point must have d coordinates");
      }
      for (int k = 0; k < d; ++k) points(static_cast<int>(r), k) = sup[r][k].get<double>();
    }
    return FactorSpec::discrete(std::move(points));
  }
  if (kind == "uniform") {
    Eigen::VectorXd lo = j.contains("low")
                             ? vector_or_scalar(j["low"], d, path + ".low")
                             : Eigen::VectorXd::Zero(d).eval();
    Eigen::VectorXd hi = j.contains("high")
                             ? vector_or_scalar(j["high"], d, path + ".high")
                             : Eigen::VectorXd::Ones(d).eval();
    return FactorSpec::uniform_box(std::move(lo), std::move(hi));
  }
  fail(path + ".kind", "expected 'discrete' or 'uniform'");
}

json factor_to_json(const FactorSpec& f) {
  json j;
  if (f.kind == FactorSpec::Kind::Discrete) {
    j["kind"] = "discrete";
    json sup = json::array();
    for (Eigen::Index r = 0; r < f.support.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < f.support.cols(); ++c) row.push_back(f.support(r, c));
      sup.push_back(row);
    }
    j["support"] = sup;
  } else {
    j["kind"] = "uniform";
    j["low"] = std::vector<double>(f.lo.data(), f.lo.data() + f.lo.size());
    j["high"] = std::vector<double>(f.hi.data(), f.hi.data() + f.hi.size());
  }
  return j;
}

NoiseSpec::Dist noise_dist_from_string(const std::string& s, const std::string& path) {
  if (s == "truncated-normal") return NoiseSpec::Dist::TruncatedNormal;
  if (s == "uniform") return NoiseSpec::Dist::Uniform;
  if (s == "rademacher-scaled") return NoiseSpec::Dist::RademacherScaled;
  fail(path, "expected 'truncated-normal', 'uniform' or 'rademacher-scaled'");
}

std::string noise_dist_name(NoiseSpec::Dist d) {
  switch (d) {
    case NoiseSpec::Dist::TruncatedNormal: return "truncated-normal";
    case NoiseSpec::Dist::Uniform: return "uniform";
    case NoiseSpec::Dist::RademacherScaled: return "rademacher-scaled";
  }
  return "?";
}

PolicySpec::Kind policy_kind_from_string(const std::string& s, const std::string& path) {
  if (s == "constant") return PolicySpec::Kind::Constant;
  if (s == "epsilon-greedy-unit") return PolicySpec::Kind::EpsGreedyUnit;
  if (s == "epsilon-greedy-pooled") return PolicySpec::Kind::EpsGreedyPooled;
  if (s == "thompson-pooled") return PolicySpec::Kind::ThompsonPooled;
  fail(path, "expected 'constant', 'epsilon-greedy-unit', 'epsilon-greedy-pooled' or 'thompson-pooled'");
}

std::string policy_kind_name(PolicySpec::Kind k) {
  switch (k) {
    case PolicySpec::Kind::Constant: return "constant";
    case PolicySpec::Kind::EpsGreedyUnit: return "epsilon-greedy-unit";
    case PolicySpec::Kind::EpsGreedyPooled: return "epsilon-greedy-pooled";
    case PolicySpec::Kind::ThompsonPooled: return "thompson-pooled";
  }
  return "?";
}

}  // namespace

std::string eta_source_name(EtaSource s) {
  switch (s) {
    case EtaSource::Fixed: return "fixed";
    case EtaSource::Tuned: return "tuned";
    case EtaSource::Schedule: return "schedule";
  }
  return "?";
}

int RunConfig::effective_subsample_k() const {
  if (subsample_k) return *subsample_k;
  const double nt = static_cast<double>(n_units) * static_cast<double>(n_times);
  return std::max(2, static_cast<int>(std::floor(std::sqrt(nt))));
}

EstimatorSettings RunConfig::estimator_settings(double eta) const {
  EstimatorSettings s;
  s.eta = eta;
  s.action = action;
  s.cap = cap;
  s.alpha = alpha;
  s.subsample_k = effective_subsample_k();
  return s;
}

TheoryParams RunConfig::theory_params() const {
  TheoryParams p;
  p.c_u = latent.unit_norm_bound(actions);
  p.c_v = latent.time_norm_bound(actions);
  p.c_eps = noise.sigma > 0.0 ? noise.c_eps : 0.0;
  p.sigma_sq = noise.sigma * noise.sigma;
  p.sigma_v = latent.time_spec(action).second_moment();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.sigma_v);
  p.lambda_a = std::max(es.eigenvalues().minCoeff(), 1e-12);
  p.delta = 0.1;
  p.big_c = 1.0;

  p.pmin_seq.assign(static_cast<std::size_t>(n_times), 0.0);
  switch (policy.kind) {
    case PolicySpec::Kind::Constant:
      std::fill(p.pmin_seq.begin(), p.pmin_seq.end(), policy.const_probs[action]);
      break;
    case PolicySpec::Kind::EpsGreedyUnit:
    case PolicySpec::Kind::EpsGreedyPooled: {
      double run_min = 1.0;
      for (int t = 1; t <= n_times; ++t) {
        run_min = std::min(run_min, policy.epsilon_at(t) / actions);
        p.pmin_seq[t - 1] = run_min;
      }
      break;
    }
    case PolicySpec::Kind::ThompsonPooled:
      throw ConfigError(
          "theory_params: thompson-pooled has no closed-form p_min; use a "
          "fixed or tuned eta source");
  }
  return p;
}

void RunConfig::validate() const {
  if (n_units < 1) fail("experiment.N", "must be >= 1");
  if (n_times < 1) fail("experiment.T", "must be >= 1");
  if (actions < 1) fail("experiment.actions", "must be >= 1");
  latent.validate(actions);
  noise.validate();
  policy.validate(actions);
  if (action < 0 || action >= actions) fail("estimator.action", "out of range");
  if (grid_k < 1) fail("estimator.eta.grid_k", "must be >= 1");
  if (cap && *cap < 1) fail("estimator.cap", "must be >= 1");
  if (subsample_k &&
      (*subsample_k < 2 || static_cast<long long>(*subsample_k) >
                               static_cast<long long>(n_units) * n_times)) {
    fail("estimator.subsample_k", "must lie in [2, N*T]");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) fail("estimator.alpha", "must lie in (0, 1)");
  if (pi_sample < 1) fail("estimator.pi_sample", "must be >= 1");
  if (eta_source == EtaSource::Fixed && !std::isfinite(fixed_eta)) {
    fail("estimator.eta.value", "must be finite");
  }
  if (eta_source == EtaSource::Tuned && n_times < 2) {
    fail("estimator.eta", "tuned source needs T >= 2");
  }
  if (reps < 1) fail("replication.reps", "must be >= 1");
  if (threads < 1) fail("replication.threads", "must be >= 1");
  if (format != "csv" && format != "json") {
    fail("output.format", "expected 'csv' or 'json'");
  }
}

RunConfig config_from_json(const json& j) {
  check_keys(j, {"experiment", "estimator", "replication", "output"}, "");
  RunConfig cfg;

  if (!j.contains("experiment")) fail("experiment", "required section missing");
  const json& exp = j["experiment"];
  check_keys(exp, {"N", "T", "d", "actions", "mean_fn", "latent", "noise", "policy"},
             "experiment");
  cfg.n_units = get_int(exp, "N", cfg.n_units, "experiment");
  cfg.n_times = get_int(exp, "T", cfg.n_times, "experiment");
  cfg.actions = get_int(exp, "actions", cfg.actions, "experiment");
  const int d = get_int(exp, "d", 1, "experiment");
  if (cfg.n_units < 1) fail("experiment.N", "must be >= 1");
  if (cfg.n_times < 1) fail("experiment.T", "must be >= 1");
  if (cfg.actions < 1) fail("experiment.actions", "must be >= 1");
  if (d < 1) fail("experiment.d", "must be >= 1");

  cfg.latent.d = d;
  cfg.latent.mean_fn = get_string(exp, "mean_fn", "bilinear", "experiment");
  cfg.latent.unit = FactorSpec::unit_cube(d);
  cfg.latent.time = FactorSpec::unit_cube(d);
  if (exp.contains("latent")) {
    const json& lat = exp["latent"];
    check_keys(lat,
               {"unit", "time", "per_action_unit", "per_action_time",
                "shared_across_actions", "c_u", "c_v"},
               "experiment.latent");
    if (lat.contains("unit")) {
      cfg.latent.unit = parse_factor(lat["unit"], d, "experiment.latent.unit");
    }
    if (lat.contains("time")) {
      cfg.latent.time = parse_factor(lat["time"], d, "experiment.latent.time");
    }
    if (lat.contains("per_action_unit")) {
      for (std::size_t a = 0; a < lat["per_action_unit"].size(); ++a) {
        cfg.latent.per_action_unit.push_back(parse_factor(
            lat["per_action_unit"][a], d, "experiment.latent.per_action_unit"));
      }
    }
    if (lat.contains("per_action_time")) {
      for (std::size_t a = 0; a < lat["per_action_time"].size(); ++a) {
        cfg.latent.per_action_time.push_back(parse_factor(
            lat["per_action_time"][a], d, "experiment.latent.per_action_time"));
      }
    }
    if (lat.contains("shared_across_actions")) {
      if (!lat["shared_across_actions"].is_boolean()) {
        fail("experiment.latent.shared_across_actions", "expected a boolean");
      }
      cfg.latent.shared_across_actions = lat["shared_across_actions"].get<bool>();
    }
    cfg.latent.c_u = get_number(lat, "c_u", 0.0, "experiment.latent");
    cfg.latent.c_v = get_number(lat, "c_v", 0.0, "experiment.latent");
  }

  if (exp.contains("noise")) {
    const json& noi = exp["noise"];
    check_keys(noi, {"sigma", "c_eps", "distribution"}, "experiment.noise");
    cfg.noise.sigma = get_number(noi, "sigma", cfg.noise.sigma, "experiment.noise");
    cfg.noise.c_eps = get_number(noi, "c_eps", cfg.noise.c_eps, "experiment.noise");
    cfg.noise.distribution = noise_dist_from_string(
        get_string(noi, "distribution", "truncated-normal", "experiment.noise"),
        "experiment.noise.distribution");
  }

  cfg.policy.const_probs = Eigen::VectorXd::Constant(cfg.actions, 1.0 / cfg.actions);
  if (exp.contains("policy")) {
    const json& pol = exp["policy"];
    check_keys(pol,
               {"kind", "p", "probs", "beta", "eps_floor", "prior_mean",
                "prior_var", "obs_var", "policy_seed"},
               "experiment.policy");
    cfg.policy.kind = policy_kind_from_string(
        get_string(pol, "kind", "constant", "experiment.policy"),
        "experiment.policy.kind");
    if (pol.contains("p")) {
      // Scalar shorthand: action 0 gets p, the rest split the remainder.
      const double p = pol["p"].get<double>();
      if (!(p >= 0.0 && p <= 1.0)) fail("experiment.policy.p", "must lie in [0, 1]");
      if (cfg.actions == 1) {
        cfg.policy.const_probs.setConstant(1.0);
      } else {
        cfg.policy.const_probs.setConstant((1.0 - p) / (cfg.actions - 1));
        cfg.policy.const_probs[0] = p;
      }
    }
    if (pol.contains("probs")) {
      cfg.policy.const_probs =
          vector_or_scalar(pol["probs"], cfg.actions, "experiment.policy.probs");
    }
    cfg.policy.beta = get_number(pol, "beta", 0.0, "experiment.policy");
    cfg.policy.eps_floor = get_number(pol, "eps_floor", 0.0, "experiment.policy");
    cfg.policy.prior_mean = get_number(pol, "prior_mean", 0.0, "experiment.policy");
    cfg.policy.prior_var = get_number(pol, "prior_var", 1.0, "experiment.policy");
    cfg.policy.obs_var = get_number(pol, "obs_var", 1.0, "experiment.policy");
    cfg.policy.policy_seed = static_cast<std::uint64_t>(
        get_int(pol, "policy_seed", 0, "experiment.policy"));
  }

  if (j.contains("estimator")) {
    const json& est = j["estimator"];
    check_keys(est, {"action", "eta", "cap", "subsample_k", "alpha", "pi_sample"},
               "estimator");
    cfg.action = get_int(est, "action", 0, "estimator");
    if (est.contains("eta")) {
      const json& eta = est["eta"];
      check_keys(eta, {"source", "value", "schedule_kind", "grid_k"}, "estimator.eta");
      const std::string source = get_string(eta, "source", "tuned", "estimator.eta");
      if (source == "fixed") {
        cfg.eta_source = EtaSource::Fixed;
      } else if (source == "tuned") {
        cfg.eta_source = EtaSource::Tuned;
      } else if (source == "schedule") {
        cfg.eta_source = EtaSource::Schedule;
      } else {
        fail("estimator.eta.source", "expected 'fixed', 'tuned' or 'schedule'");
      }
      cfg.fixed_eta = get_number(eta, "value", 0.0, "estimator.eta");
      if (eta.contains("schedule_kind")) {
        cfg.schedule_kind = schedule_kind_from_string(
            get_string(eta, "schedule_kind", "discrete", "estimator.eta"));
      }
      cfg.grid_k = get_int(eta, "grid_k", 20, "estimator.eta");
    }
    if (est.contains("cap") && !est["cap"].is_null()) {
      cfg.cap = get_int(est, "cap", 1, "estimator");
    }
    if (est.contains("subsample_k") && !est["subsample_k"].is_null()) {
      cfg.subsample_k = get_int(est, "subsample_k", 2, "estimator");
    }
    cfg.alpha = get_number(est, "alpha", 0.05, "estimator");
    cfg.pi_sample = get_int(est, "pi_sample", 50, "estimator");
  }

  if (j.contains("replication")) {
    const json& rep = j["replication"];
    check_keys(rep, {"reps", "seed", "threads"}, "replication");
    cfg.reps = get_int(rep, "reps", 1, "replication");
    if (rep.contains("seed")) {
      if (!rep["seed"].is_number_integer()) fail("replication.seed", "expected an integer");
      cfg.seed = rep["seed"].get<std::uint64_t>();
    }
    cfg.threads = get_int(rep, "threads", 1, "replication");
  }

  if (j.contains("output")) {
    const json& out = j["output"];
    check_keys(out, {"path", "format"}, "output");
    cfg.out_path = get_string(out, "path", cfg.out_path, "output");
    cfg.format = get_string(out, "format", cfg.format, "output");
  }

  if (const char* env_seed = std::getenv("SEQCF_SEED")) {
    cfg.seed = std::strtoull(env_seed, nullptr, 10);
  }
  if (const char* env_threads = std::getenv("SEQCF_THREADS")) {
    cfg.threads = std::max(1, static_cast<int>(std::strtol(env_threads, nullptr, 10)));
  }

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  json exp;
  exp["N"] = cfg.n_units;
  exp["T"] = cfg.n_times;
  exp["d"] = cfg.latent.d;
  exp["actions"] = cfg.actions;
  exp["mean_fn"] = cfg.latent.mean_fn;
  json lat;
  lat["unit"] = factor_to_json(cfg.latent.unit);
  lat["time"] = factor_to_json(cfg.latent.time);
  if (!cfg.latent.per_action_unit.empty()) {
    json arr = json::array();
    for (const auto& f : cfg.latent.per_action_unit) arr.push_back(factor_to_json(f));
    lat["per_action_unit"] = arr;
  }
  if (!cfg.latent.per_action_time.empty()) {
    json arr = json::array();
    for (const auto& f : cfg.latent.per_action_time) arr.push_back(factor_to_json(f));
    lat["per_action_time"] = arr;
  }
  lat["shared_across_actions"] = cfg.latent.shared_across_actions;
  lat["c_u"] = cfg.latent.unit_norm_bound(cfg.actions);
  lat["c_v"] = cfg.latent.time_norm_bound(cfg.actions);
  exp["latent"] = lat;
  json noi;
  noi["sigma"] = cfg.noise.sigma;
  noi["c_eps"] = cfg.noise.c_eps;
  noi["distribution"] = noise_dist_name(cfg.noise.distribution);
  exp["noise"] = noi;
  json pol;
  pol["kind"] = policy_kind_name(cfg.policy.kind);
  pol["probs"] = std::vector<double>(
      cfg.policy.const_probs.data(),
      cfg.policy.const_probs.data() + cfg.policy.const_probs.size());
  pol["beta"] = cfg.policy.beta;
  pol["eps_floor"] = cfg.policy.eps_floor;
  pol["prior_mean"] = cfg.policy.prior_mean;
  pol["prior_var"] = cfg.policy.prior_var;
  pol["obs_var"] = cfg.policy.obs_var;
  pol["policy_seed"] = cfg.policy.policy_seed;
  exp["policy"] = pol;
  j["experiment"] = exp;

  json est;
  est["action"] = cfg.action;
  json eta;
  eta["source"] = eta_source_name(cfg.eta_source);
  eta["value"] = cfg.fixed_eta;
  eta["schedule_kind"] = schedule_kind_name(cfg.schedule_kind);
  eta["grid_k"] = cfg.grid_k;
  est["eta"] = eta;
  est["cap"] = cfg.cap ? json(*cfg.cap) : json(nullptr);
  est["subsample_k"] = cfg.effective_subsample_k();
  est["alpha"] = cfg.alpha;
  est["pi_sample"] = cfg.pi_sample;
  j["estimator"] = est;

  json rep;
  rep["reps"] = cfg.reps;
  rep["seed"] = cfg.seed;
  rep["threads"] = cfg.threads;
  j["replication"] = rep;

  json out;
  out["path"] = cfg.out_path;
  out["format"] = cfg.format;
  j["output"] = out;
  return j;
}

}  // namespace seqcf
