// Python bindings for the simulator / estimator core. Matrices cross the
// boundary as numpy arrays via pybind11's Eigen support.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqcf/calibrate.hpp"
#include "seqcf/config.hpp"
#include "seqcf/errors.hpp"
#include "seqcf/inference.hpp"
#include "seqcf/log_io.hpp"
#include "seqcf/montecarlo.hpp"
#include "seqcf/theory.hpp"

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace seqcf;

namespace {

FactorSpec factor_from_kwargs(const std::string& kind,
                              std::optional<Eigen::MatrixXd> support,
                              std::optional<Eigen::VectorXd> lo,
                              std::optional<Eigen::VectorXd> hi) {
  if (kind == "discrete") {
    if (!support) throw ConfigError("discrete factor spec needs support points");
    return FactorSpec::discrete(*support);
  }
  if (kind == "uniform") {
    if (!lo || !hi) throw ConfigError("uniform factor spec needs low/high");
    return FactorSpec::uniform_box(*lo, *hi);
  }
  throw ConfigError("factor kind must be 'discrete' or 'uniform'");
}

}  // namespace

PYBIND11_MODULE(_seqcf, m) {
  m.doc() = "nearest-neighbor counterfactual estimation for sequential experiments";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ArgumentError>(m, "ArgumentError");
  py::register_exception<EstimationError>(m, "EstimationError");
  py::register_exception<IntervalUnavailableError>(m, "IntervalUnavailableError");
  py::register_exception<CalibrationError>(m, "CalibrationError");
  py::register_exception<IoError>(m, "IoError");

  py::class_<LatentState>(m, "LatentState")
      .def_readonly("unit_factors", &LatentState::unit_factors)
      .def_readonly("time_factors", &LatentState::time_factors)
      .def_readonly("mean_fn", &LatentState::mean_fn)
      .def_property_readonly("n_units", &LatentState::num_units)
      .def_property_readonly("n_times", &LatentState::num_times)
      .def_property_readonly("n_actions", &LatentState::num_actions);

  py::class_<MeanTensor>(m, "MeanTensor")
      .def_readonly("theta", &MeanTensor::theta)
      .def("at", &MeanTensor::at, py::arg("i"), py::arg("t"), py::arg("a"));

  py::class_<ExperimentLog>(m, "ExperimentLog")
      .def(py::init<>())
      .def_readwrite("treatments", &ExperimentLog::treatments)
      .def_readwrite("outcomes", &ExperimentLog::outcomes)
      .def_readwrite("assign_probs", &ExperimentLog::assign_probs)
      .def_readwrite("noise_bound", &ExperimentLog::noise_bound)
      .def_readwrite("noise_sd", &ExperimentLog::noise_sd)
      .def_property_readonly("n_units", &ExperimentLog::num_units)
      .def_property_readonly("n_times", &ExperimentLog::num_times)
      .def_property_readonly("n_actions", &ExperimentLog::num_actions)
      .def("validate", &ExperimentLog::validate);

  m.def("build_mean_tensor", &build_mean_tensor, py::arg("latent"));
  m.def("realized_pmin", &realized_pmin, py::arg("log"), py::arg("a"), py::arg("t"));

  py::class_<FactorSpec>(m, "FactorSpec")
      .def(py::init(&factor_from_kwargs), py::arg("kind"),
           py::arg("support") = std::nullopt, py::arg("low") = std::nullopt,
           py::arg("high") = std::nullopt)
      .def("norm_bound", &FactorSpec::norm_bound)
      .def("mean", &FactorSpec::mean)
      .def("second_moment", &FactorSpec::second_moment);

  py::class_<LatentSpec>(m, "LatentSpec")
      .def(py::init<>())
      .def_readwrite("d", &LatentSpec::d)
      .def_readwrite("unit", &LatentSpec::unit)
      .def_readwrite("time", &LatentSpec::time)
      .def_readwrite("per_action_unit", &LatentSpec::per_action_unit)
      .def_readwrite("per_action_time", &LatentSpec::per_action_time)
      .def_readwrite("shared_across_actions", &LatentSpec::shared_across_actions)
      .def_readwrite("c_u", &LatentSpec::c_u)
      .def_readwrite("c_v", &LatentSpec::c_v)
      .def_readwrite("mean_fn", &LatentSpec::mean_fn);

  py::enum_<NoiseSpec::Dist>(m, "NoiseDist")
      .value("truncated_normal", NoiseSpec::Dist::TruncatedNormal)
      .value("uniform", NoiseSpec::Dist::Uniform)
      .value("rademacher_scaled", NoiseSpec::Dist::RademacherScaled);

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def(py::init<>())
      .def_readwrite("sigma", &NoiseSpec::sigma)
      .def_readwrite("c_eps", &NoiseSpec::c_eps)
      .def_readwrite("distribution", &NoiseSpec::distribution);

  py::enum_<PolicySpec::Kind>(m, "PolicyKind")
      .value("constant", PolicySpec::Kind::Constant)
      .value("epsilon_greedy_unit", PolicySpec::Kind::EpsGreedyUnit)
      .value("epsilon_greedy_pooled", PolicySpec::Kind::EpsGreedyPooled)
      .value("thompson_pooled", PolicySpec::Kind::ThompsonPooled);

  py::class_<PolicySpec>(m, "PolicySpec")
      .def(py::init<>())
      .def_readwrite("kind", &PolicySpec::kind)
      .def_readwrite("const_probs", &PolicySpec::const_probs)
      .def_readwrite("beta", &PolicySpec::beta)
      .def_readwrite("eps_floor", &PolicySpec::eps_floor)
      .def_readwrite("prior_mean", &PolicySpec::prior_mean)
      .def_readwrite("prior_var", &PolicySpec::prior_var)
      .def_readwrite("obs_var", &PolicySpec::obs_var)
      .def_readwrite("policy_seed", &PolicySpec::policy_seed);

  m.def("sample_latent", &sample_latent, py::arg("spec"), py::arg("n_units"),
        py::arg("n_times"), py::arg("action_count"), py::arg("key"));
  m.def(
      "policy_step",
      [](const PolicySpec& spec, const Eigen::MatrixXi& treatments,
         const Eigen::MatrixXd& outcomes, int t_count, int t, int action_count) {
        HistoryView h{treatments, outcomes, t_count};
        return policy_step(spec, h, t, action_count);
      },
      py::arg("spec"), py::arg("treatments"), py::arg("outcomes"),
      py::arg("t_count"), py::arg("t"), py::arg("action_count"));
  m.def("run_experiment", &run_experiment, py::arg("latent"), py::arg("noise"),
        py::arg("policy"), py::arg("key"));

  py::class_<EstimatorSettings>(m, "EstimatorSettings")
      .def(py::init<>())
      .def_readwrite("eta", &EstimatorSettings::eta)
      .def_readwrite("action", &EstimatorSettings::action)
      .def_readwrite("cap", &EstimatorSettings::cap)
      .def_readwrite("alpha", &EstimatorSettings::alpha)
      .def_readwrite("subsample_k", &EstimatorSettings::subsample_k);

  py::class_<DistanceMatrix>(m, "DistanceMatrix")
      .def_readonly("rho", &DistanceMatrix::rho)
      .def_readonly("overlap", &DistanceMatrix::overlap)
      .def_readonly("time_window", &DistanceMatrix::time_window);

  py::class_<Estimate>(m, "Estimate")
      .def_readonly("value", &Estimate::value)
      .def_readonly("neighbor_count", &Estimate::neighbor_count)
      .def_property_readonly(
          "fallback", [](const Estimate& e) { return fallback_name(e.fallback); });

  m.def("all_times", &all_times, py::arg("t_count"));
  m.def("pairwise_distance", &pairwise_distance, py::arg("log"), py::arg("a"),
        py::arg("window"));
  m.def("neighbor_set", &neighbor_set, py::arg("dist"), py::arg("log"),
        py::arg("i"), py::arg("t"), py::arg("settings"));
  m.def("nn_estimate", &nn_estimate, py::arg("log"), py::arg("dist"), py::arg("i"),
        py::arg("t"), py::arg("settings"), py::arg("cell_key") = 0);
  m.def("estimate_all", &estimate_all, py::arg("log"), py::arg("dist"),
        py::arg("settings"), py::arg("cell_key") = 0);

  py::class_<IntervalEstimate>(m, "IntervalEstimate")
      .def_readonly("center", &IntervalEstimate::center)
      .def_readonly("half_width", &IntervalEstimate::half_width)
      .def_readonly("level", &IntervalEstimate::level)
      .def_readonly("n_effective", &IntervalEstimate::n_effective)
      .def("lo", &IntervalEstimate::lo)
      .def("hi", &IntervalEstimate::hi)
      .def("covers", &IntervalEstimate::covers, py::arg("x"));

  m.def("inv_normal_cdf", &inv_normal_cdf, py::arg("p"));
  m.def("prediction_interval", &prediction_interval, py::arg("estimate"),
        py::arg("sigma_hat"), py::arg("alpha"));
  m.def("population_estimate", &population_estimate, py::arg("log"),
        py::arg("estimates"), py::arg("a"));
  m.def(
      "subsample_ci",
      [](const std::vector<Estimate>& estimates, int n_units, int n_times, int k,
         double alpha, std::uint64_t key) {
        RngStream rng(key, StreamRole::SubsampleCi);
        return subsample_ci(estimates, n_units, n_times, k, alpha, rng);
      },
      py::arg("estimates"), py::arg("n_units"), py::arg("n_times"), py::arg("k"),
      py::arg("alpha"), py::arg("key"));

  py::class_<TuningResult>(m, "TuningResult")
      .def_readonly("eta_grid", &TuningResult::eta_grid)
      .def_readonly("losses", &TuningResult::losses)
      .def_readonly("eta_tuned", &TuningResult::eta_tuned)
      .def_readonly("sigma_hat_sq", &TuningResult::sigma_hat_sq)
      .def_readonly("t1", &TuningResult::t1)
      .def_readonly("t2", &TuningResult::t2)
      .def_readonly("degenerate", &TuningResult::degenerate);

  py::class_<SigmaEstimate>(m, "SigmaEstimate")
      .def_readonly("sigma_sq", &SigmaEstimate::sigma_sq)
      .def_readonly("n_entries", &SigmaEstimate::n_entries)
      .def_readonly("n_self", &SigmaEstimate::n_self)
      .def_readonly("degenerate", &SigmaEstimate::degenerate);

  py::class_<IterationTrace>(m, "IterationTrace")
      .def_readonly("eta", &IterationTrace::eta)
      .def_readonly("sigma_sq", &IterationTrace::sigma_sq)
      .def_readonly("converged", &IterationTrace::converged)
      .def_readonly("iterations", &IterationTrace::iterations);

  py::class_<IterationResult>(m, "IterationResult")
      .def_readonly("eta", &IterationResult::eta)
      .def_readonly("sigma_hat_sq", &IterationResult::sigma_hat_sq)
      .def_readonly("trace", &IterationResult::trace);

  m.def("split_halves", &split_halves, py::arg("t_count"));
  m.def("eta_grid_from_percentiles", &eta_grid_from_percentiles, py::arg("dist"),
        py::arg("k"));
  m.def(
      "tune_eta",
      [](const ExperimentLog& log, int a, int k, const EstimatorSettings& settings) {
        return tune_eta(log, a, k, settings);
      },
      py::arg("log"), py::arg("a"), py::arg("k"), py::arg("settings"));
  m.def("estimate_sigma", &estimate_sigma, py::arg("log"), py::arg("a"),
        py::arg("eta"), py::arg("split"));
  m.def("iterate_sigma_eta", &iterate_sigma_eta, py::arg("log"), py::arg("a"),
        py::arg("eta0"), py::arg("max_iters") = 25, py::arg("tol") = 1e-3);

  py::class_<TheoryParams>(m, "TheoryParams")
      .def(py::init<>())
      .def_readwrite("c_u", &TheoryParams::c_u)
      .def_readwrite("c_v", &TheoryParams::c_v)
      .def_readwrite("c_eps", &TheoryParams::c_eps)
      .def_readwrite("lambda_a", &TheoryParams::lambda_a)
      .def_readwrite("sigma_sq", &TheoryParams::sigma_sq)
      .def_readwrite("delta", &TheoryParams::delta)
      .def_readwrite("big_c", &TheoryParams::big_c)
      .def_readwrite("pmin_seq", &TheoryParams::pmin_seq)
      .def_readwrite("sigma_v", &TheoryParams::sigma_v);

  py::class_<BoundEvaluation>(m, "BoundEvaluation")
      .def_readonly("applicable", &BoundEvaluation::applicable)
      .def_readonly("reason", &BoundEvaluation::reason)
      .def_readonly("chi", &BoundEvaluation::chi)
      .def_readonly("eta_prime", &BoundEvaluation::eta_prime)
      .def_readonly("bias_eta", &BoundEvaluation::bias_eta)
      .def_readonly("bias_chi", &BoundEvaluation::bias_chi)
      .def_readonly("variance", &BoundEvaluation::variance)
      .def_readonly("inflation", &BoundEvaluation::inflation)
      .def_readonly("total", &BoundEvaluation::total)
      .def_readonly("success_prob", &BoundEvaluation::success_prob);

  py::class_<MonteCarloProbability>(m, "MonteCarloProbability")
      .def_readonly("estimate", &MonteCarloProbability::estimate)
      .def_readonly("std_error", &MonteCarloProbability::std_error)
      .def_readonly("n_samples", &MonteCarloProbability::n_samples);

  m.def("err_term_chi", &err_term_chi, py::arg("params"), py::arg("n_units"),
        py::arg("n_times"));
  m.def("phi_discrete", &phi_discrete, py::arg("support"), py::arg("sigma_v"),
        py::arg("u"), py::arg("r"));
  m.def(
      "phi_continuous_mc",
      [](int d, const Eigen::VectorXd& u, double r, long long n_samples,
         std::uint64_t key) {
        RngStream rng(key, StreamRole::PhiMc);
        return phi_continuous_mc(d, u, r, n_samples, rng);
      },
      py::arg("d"), py::arg("u"), py::arg("r"), py::arg("n_samples"), py::arg("key"));
  m.def("thm1_bound", &thm1_bound, py::arg("params"), py::arg("n_units"),
        py::arg("n_times"), py::arg("t"), py::arg("eta"), py::arg("phi_at"));
  m.def(
      "eta_schedule",
      [](const std::string& kind, const TheoryParams& params, long long n,
         long long t, double beta) {
        return eta_schedule(schedule_kind_from_string(kind), params, n, t, beta);
      },
      py::arg("kind"), py::arg("params"), py::arg("n_units"), py::arg("n_times"),
      py::arg("beta"));
  m.def("oracle_rho_star", &oracle_rho_star, py::arg("latent"), py::arg("sigma_sq"),
        py::arg("i"), py::arg("j"), py::arg("a"), py::arg("sigma_v"));

  m.def("derive_key", &derive_key, py::arg("master_seed"), py::arg("replication"));

  m.def(
      "load_config_json",
      [](const std::string& text) {
        return config_to_json(config_from_json(nlohmann::json::parse(text))).dump(2);
      },
      py::arg("text"), "Validate a config document; returns the normalized dump.");
  m.def(
      "run_montecarlo_json",
      [](const std::string& text) {
        const RunConfig cfg = config_from_json(nlohmann::json::parse(text));
        const McResult result = run_montecarlo(cfg);
        return records_to_json(result.records, result.summary).dump();
      },
      py::arg("text"),
      "Run a study from a config document; returns records and summary as JSON.");
  m.def(
      "write_stored_experiment",
      [](const ExperimentLog& log, std::optional<LatentState> latent,
         const std::string& path) {
        StoredExperiment stored;
        stored.log = log;
        stored.latent = std::move(latent);
        write_stored_experiment(stored, path);
      },
      py::arg("log"), py::arg("latent"), py::arg("path"));
  m.def(
      "read_stored_experiment",
      [](const std::string& path) {
        StoredExperiment stored = read_stored_experiment(path);
        return py::make_tuple(stored.log, stored.latent);
      },
      py::arg("path"));
}
