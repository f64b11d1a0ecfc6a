// seqcf command line: simulate experiment logs, estimate counterfactual
// means from stored logs, tune the threshold, run Monte Carlo studies, and
// evaluate the theoretical error bound.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seqcf/calibrate.hpp"
#include "seqcf/config.hpp"
#include "seqcf/errors.hpp"
#include "seqcf/inference.hpp"
#include "seqcf/log_io.hpp"
#include "seqcf/montecarlo.hpp"
#include "seqcf/theory.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<int> threads;
  std::string out_path;
  std::string format;
};

seqcf::RunConfig load_with_overrides(const CommonOpts& opts) {
  seqcf::RunConfig cfg = seqcf::load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.reps) cfg.reps = *opts.reps;
  if (opts.threads) cfg.threads = *opts.threads;
  if (!opts.out_path.empty()) cfg.out_path = opts.out_path;
  if (!opts.format.empty()) cfg.format = opts.format;
  cfg.validate();
  return cfg;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw seqcf::IoError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw seqcf::IoError("write failed: " + path);
}

int cmd_simulate(const CommonOpts& opts, bool strip_latent) {
  const seqcf::RunConfig cfg = load_with_overrides(opts);
  const std::uint64_t key = seqcf::derive_key(cfg.seed, 0);
  const seqcf::LatentState latent =
      seqcf::sample_latent(cfg.latent, cfg.n_units, cfg.n_times, cfg.actions, key);
  seqcf::StoredExperiment stored;
  stored.log = seqcf::run_experiment(latent, cfg.noise, cfg.policy, key);
  if (!strip_latent) stored.latent = latent;
  seqcf::write_stored_experiment(stored, cfg.out_path);
  std::cerr << "wrote log to " << cfg.out_path << '\n';
  return 0;
}

int cmd_estimate(const std::string& log_path, int action, const std::string& eta_mode,
                 double eta_value, int grid_k, double alpha, const std::string& out) {
  const seqcf::StoredExperiment stored = seqcf::read_stored_experiment(log_path);
  const seqcf::ExperimentLog& log = stored.log;

  seqcf::EstimatorSettings settings;
  settings.action = action;
  settings.alpha = alpha;
  double sigma_hat_sq = std::numeric_limits<double>::quiet_NaN();
  if (eta_mode == "fixed") {
    settings.eta = eta_value;
  } else if (eta_mode == "tuned") {
    const seqcf::TuningResult tuning = seqcf::tune_eta(log, action, grid_k, settings);
    settings.eta = tuning.eta_tuned;
    sigma_hat_sq = tuning.sigma_hat_sq;
  } else {
    throw seqcf::ConfigError("estimate: --eta-mode must be 'fixed' or 'tuned'");
  }

  const seqcf::DistanceMatrix dist =
      seqcf::pairwise_distance(log, action, seqcf::all_times(log.num_times()));
  const std::vector<seqcf::Estimate> est = seqcf::estimate_all(log, dist, settings);

  json rows = json::array();
  for (int i = 0; i < log.num_units(); ++i) {
    for (int t = 0; t < log.num_times(); ++t) {
      const auto& e = est[static_cast<std::size_t>(i) * log.num_times() + t];
      json row;
      row["i"] = i;
      row["t"] = t;
      row["value"] = e.value;
      row["neighbor_count"] = e.neighbor_count;
      row["fallback"] = seqcf::fallback_name(e.fallback);
      rows.push_back(std::move(row));
    }
  }
  json out_doc;
  out_doc["action"] = action;
  out_doc["eta"] = settings.eta;
  if (std::isfinite(sigma_hat_sq)) out_doc["sigma_hat_sq"] = sigma_hat_sq;
  out_doc["estimates"] = rows;
  if (stored.latent && stored.latent->mean_fn == "bilinear") {
    // Oracle metrics when the ground truth rides along with the log.
    const seqcf::MeanTensor theta = seqcf::build_mean_tensor(*stored.latent);
    double sum = 0.0;
    for (int i = 0; i < log.num_units(); ++i) {
      for (int t = 0; t < log.num_times(); ++t) {
        const auto& e = est[static_cast<std::size_t>(i) * log.num_times() + t];
        const double d = e.value - theta.at(i, t, action);
        sum += d * d;
      }
    }
    out_doc["oracle_mse"] = sum / (static_cast<double>(log.num_units()) * log.num_times());
  }
  write_json(out_doc, out);
  return 0;
}

int cmd_tune(const std::string& log_path, int action, int grid_k, double eta0,
             int max_iters, double tol, const std::string& out) {
  const seqcf::StoredExperiment stored = seqcf::read_stored_experiment(log_path);
  seqcf::EstimatorSettings settings;
  settings.action = action;
  const seqcf::TuningResult tuning =
      seqcf::tune_eta(stored.log, action, grid_k, settings);

  json doc;
  doc["eta_grid"] = tuning.eta_grid;
  doc["losses"] = tuning.losses;
  doc["eta_tuned"] = tuning.eta_tuned;
  doc["sigma_hat_sq"] = tuning.sigma_hat_sq;
  doc["t1_size"] = tuning.t1.size();
  doc["t2_size"] = tuning.t2.size();
  doc["degenerate"] = tuning.degenerate;

  if (eta0 > 0.0) {
    const seqcf::IterationResult iter =
        seqcf::iterate_sigma_eta(stored.log, action, eta0, max_iters, tol);
    json trace;
    trace["eta"] = iter.trace.eta;
    trace["sigma_sq"] = iter.trace.sigma_sq;
    trace["converged"] = iter.trace.converged;
    trace["iterations"] = iter.trace.iterations;
    doc["iteration"] = {{"eta", iter.eta},
                        {"sigma_hat_sq", iter.sigma_hat_sq},
                        {"trace", trace}};
  }
  write_json(doc, out);
  return 0;
}

int cmd_montecarlo(const CommonOpts& opts, bool echo_config) {
  const seqcf::RunConfig cfg = load_with_overrides(opts);
  if (echo_config) {
    std::cout << seqcf::config_to_json(cfg).dump(2) << '\n';
  }
  const seqcf::McResult result = seqcf::run_montecarlo(cfg);
  seqcf::emit_results(result.records, result.summary, cfg.format, cfg.out_path);
  std::cerr << "wrote " << result.records.size() << " replication(s) to "
            << cfg.out_path << " (" << result.summary.failed << " failed)\n";
  return result.summary.failed == result.summary.reps && result.summary.reps > 0 ? 3 : 0;
}

int cmd_bound(const CommonOpts& opts, long long n_override, long long t_override,
              double eta, double r_phi, const std::string& schedule, double beta) {
  const seqcf::RunConfig cfg = load_with_overrides(opts);
  const seqcf::TheoryParams params = cfg.theory_params();
  const long long n = n_override > 0 ? n_override : cfg.n_units;
  const long long t_count = t_override > 0 ? t_override : cfg.n_times;

  json doc;
  doc["chi"] = seqcf::err_term_chi(params, n, t_count);
  if (!schedule.empty()) {
    doc["eta_schedule"] =
        seqcf::eta_schedule(seqcf::schedule_kind_from_string(schedule), params, n,
                            t_count, beta);
  }
  if (eta > 0.0) {
    // Discrete-support phi when available, otherwise a constant supplied
    // with --phi.
    std::function<double(double)> phi;
    const seqcf::FactorSpec& unit = cfg.latent.unit_spec(cfg.action);
    if (unit.kind == seqcf::FactorSpec::Kind::Discrete) {
      const Eigen::MatrixXd support = unit.support;
      const Eigen::MatrixXd sigma_v = params.sigma_v;
      const Eigen::VectorXd u0 = support.row(0);
      phi = [support, sigma_v, u0](double r) {
        return seqcf::phi_discrete(support, sigma_v, u0, r);
      };
    } else {
      phi = [r_phi](double) { return r_phi; };
    }
    const seqcf::BoundEvaluation b =
        seqcf::thm1_bound(params, n, t_count, static_cast<int>(t_count), eta, phi);
    json jb;
    jb["applicable"] = b.applicable;
    jb["reason"] = b.reason;
    jb["chi"] = b.chi;
    jb["eta_prime"] = b.eta_prime;
    jb["bias_eta"] = b.bias_eta;
    jb["bias_chi"] = b.bias_chi;
    jb["variance"] = b.variance;
    jb["inflation"] = b.inflation;
    jb["total"] = b.total;
    jb["success_prob"] = b.success_prob;
    doc["bound"] = jb;
  }
  write_json(doc, opts.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"counterfactual inference in sequential experiments"};
  app.require_subcommand(1);

  CommonOpts opts;
  bool strip_latent = false;
  bool echo_config = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config_path, "JSON configuration file");
    if (needs_config) c->required();
    sub->add_option("--seed", opts.seed, "master seed override");
    sub->add_option("--reps", opts.reps, "replication count override");
    sub->add_option("--threads", opts.threads, "worker thread override");
    sub->add_option("--out", opts.out_path, "output path ('-' for stdout)");
    sub->add_option("--format", opts.format, "output format: csv or json");
  };

  auto* simulate = app.add_subcommand("simulate", "generate one experiment log");
  add_common(simulate, true);
  simulate->add_flag("--strip-latent", strip_latent,
                     "omit the latent ground truth from the stored log");

  std::string log_path;
  int action = 0;
  std::string eta_mode = "tuned";
  double eta_value = 0.0;
  int grid_k = 20;
  double alpha = 0.05;
  auto* estimate = app.add_subcommand("estimate", "estimate from a stored log");
  estimate->add_option("--log", log_path, "stored experiment JSON")->required();
  estimate->add_option("--action", action, "target action");
  estimate->add_option("--eta-mode", eta_mode, "'tuned' or 'fixed'");
  estimate->add_option("--eta", eta_value, "threshold for --eta-mode fixed");
  estimate->add_option("--grid-k", grid_k, "percentile grid size for tuning");
  estimate->add_option("--alpha", alpha, "interval level");
  estimate->add_option("--out", opts.out_path, "output path ('-' for stdout)");

  double eta0 = 0.0;
  int max_iters = 25;
  double tol = 1e-3;
  auto* tune = app.add_subcommand("tune", "threshold tuning and variance estimation");
  tune->add_option("--log", log_path, "stored experiment JSON")->required();
  tune->add_option("--action", action, "target action");
  tune->add_option("--grid-k", grid_k, "percentile grid size");
  tune->add_option("--eta0", eta0, "also run the iterative refinement from eta0");
  tune->add_option("--max-iters", max_iters, "iteration cap");
  tune->add_option("--tol", tol, "relative convergence tolerance");
  tune->add_option("--out", opts.out_path, "output path ('-' for stdout)");

  auto* montecarlo = app.add_subcommand("montecarlo", "run a replicated study");
  add_common(montecarlo, true);
  montecarlo->add_flag("--echo-config", echo_config,
                       "print the normalized configuration before running");

  long long n_override = 0, t_override = 0;
  double bound_eta = 0.0, phi_const = 1.0, beta = 0.0;
  std::string schedule;
  auto* bound = app.add_subcommand("bound", "evaluate the theoretical error bound");
  add_common(bound, true);
  bound->add_option("--N", n_override, "override N");
  bound->add_option("--T", t_override, "override T");
  bound->add_option("--eta", bound_eta, "threshold to evaluate the bound at");
  bound->add_option("--phi", phi_const, "constant phi for non-discrete supports");
  bound->add_option("--schedule", schedule,
                    "also report the scheduled eta: discrete, continuous-unit, "
                    "continuous-ate");
  bound->add_option("--beta", beta, "exploration decay exponent for the schedule");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(opts, strip_latent);
    if (estimate->parsed()) {
      return cmd_estimate(log_path, action, eta_mode, eta_value, grid_k, alpha,
                          opts.out_path);
    }
    if (tune->parsed()) {
      return cmd_tune(log_path, action, grid_k, eta0, max_iters, tol, opts.out_path);
    }
    if (montecarlo->parsed()) return cmd_montecarlo(opts, echo_config);
    if (bound->parsed()) {
      return cmd_bound(opts, n_override, t_override, bound_eta, phi_const, schedule,
                       beta);
    }
  } catch (const seqcf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
