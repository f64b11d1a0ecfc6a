#include "seqcf/theory.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "seqcf/errors.hpp"

namespace seqcf {

double TheoryParams::pmin_at(int t) const {
  if (pmin_seq.empty()) throw ConfigError("theory params: empty pmin sequence");
  if (t < 1) throw ArgumentError("theory params: time index must be >= 1");
  const std::size_t idx = std::min<std::size_t>(pmin_seq.size(), static_cast<std::size_t>(t));
  return pmin_seq[idx - 1];
}

void TheoryParams::validate() const {
  if (!(c_u >= 0.0 && c_v > 0.0 && c_eps >= 0.0)) {
    throw ConfigError("theory params: bound constants must be positive");
  }
  if (!(lambda_a > 0.0)) throw ConfigError("theory params: lambda_a must be > 0");
  if (!(sigma_sq >= 0.0)) throw ConfigError("theory params: sigma_sq must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("theory params: delta must lie in (0, 1)");
  }
  if (!(big_c > 0.0)) throw ConfigError("theory params: big_c must be > 0");
  if (pmin_seq.empty()) throw ConfigError("theory params: empty pmin sequence");
  double prev = 1.0;
  for (double p : pmin_seq) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("theory params: pmin entries must lie in [0, 1]");
    }
    if (p > prev + 1e-15) {
      throw ConfigError("theory params: pmin sequence must be non-increasing");
    }
    prev = p;
  }
  if (sigma_v.size() > 0) {
    if (sigma_v.rows() != sigma_v.cols()) {
      throw ConfigError("theory params: sigma_v must be square");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_v);
    const double lmin = es.eigenvalues().minCoeff();
    if (lambda_a > lmin + 1e-9) {
      throw ConfigError("theory params: lambda_a exceeds the smallest eigenvalue of sigma_v");
    }
  }
}

double err_term_chi(const TheoryParams& params, long long n_units, long long n_times) {
  if (n_units < 1 || n_times < 1) throw ArgumentError("err_term_chi: need N, T >= 1");
  const double pmin = params.pmin_at(static_cast<int>(n_times));
  if (!(pmin > 0.0)) throw ArgumentError("err_term_chi: p_min,T must be > 0");
  const double b = params.c_v * params.c_u + params.c_eps;
  const double log_arg =
      4.0 * static_cast<double>(n_units) * static_cast<double>(n_times) / params.delta;
  return 4.0 * b * b * std::sqrt(2.0 * std::log(log_arg)) /
         (pmin * std::sqrt(static_cast<double>(n_times)));
}

double phi_discrete(const Eigen::MatrixXd& support, const Eigen::MatrixXd& sigma_v,
                    const Eigen::VectorXd& u, double r) {
  if (support.rows() < 1) throw ArgumentError("phi_discrete: empty support");
  if (sigma_v.rows() != support.cols() || sigma_v.cols() != support.cols()) {
    throw ArgumentError("phi_discrete: sigma_v dimension mismatch");
  }
  if (u.size() != support.cols()) {
    throw ArgumentError("phi_discrete: point dimension mismatch");
  }
  long long hits = 0;
  for (Eigen::Index k = 0; k < support.rows(); ++k) {
    const Eigen::VectorXd gap = support.row(k).transpose() - u;
    if (gap.dot(sigma_v * gap) <= r) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(support.rows());
}

MonteCarloProbability phi_continuous_mc(int d, const Eigen::VectorXd& u, double r,
                                        long long n_samples, RngStream& rng) {
  if (d < 1 || u.size() != d) throw ArgumentError("phi_continuous_mc: bad dimension");
  if (r < 0.0) throw ArgumentError("phi_continuous_mc: radius must be >= 0");
  if (n_samples < 1) throw ArgumentError("phi_continuous_mc: need samples >= 1");
  long long hits = 0;
  for (long long s = 0; s < n_samples; ++s) {
    double sq = 0.0;
    for (int k = 0; k < d; ++k) {
      const double gap = rng.uniform01() - u[k];
      sq += gap * gap;
    }
    if (sq <= r) ++hits;
  }
  MonteCarloProbability out;
  out.estimate = static_cast<double>(hits) / static_cast<double>(n_samples);
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) /
                            static_cast<double>(n_samples));
  out.n_samples = n_samples;
  return out;
}

BoundEvaluation thm1_bound(const TheoryParams& params, long long n_units,
                           long long n_times, int t, double eta,
                           const std::function<double(double)>& phi_at) {
  params.validate();
  if (t < 1 || t > n_times) throw ArgumentError("thm1_bound: time index out of range");

  BoundEvaluation out;
  out.chi = err_term_chi(params, n_units, n_times);
  out.eta_prime = eta - 2.0 * params.sigma_sq - out.chi;
  if (out.eta_prime < 0.0) {
    out.reason = "eta below 2 sigma^2 + chi";
    return out;
  }
  const double pt = params.pmin_at(t);
  const double phi1 = phi_at(out.eta_prime);
  if (!(pt * (static_cast<double>(n_units) - 1.0) * phi1 >= 1.0)) {
    out.reason = "p_min,t (N-1) phi(eta') below 1";
    return out;
  }
  out.applicable = true;

  const double n = static_cast<double>(n_units);
  const double c_v2 = params.c_v * params.c_v;
  const double c_eps2 = params.c_eps * params.c_eps;
  const double log8 = std::log(8.0 / params.delta);

  out.bias_eta = 2.0 * c_v2 * (eta - 2.0 * params.sigma_sq) / params.lambda_a;
  out.bias_chi = 2.0 * c_v2 * out.chi / params.lambda_a;

  // 72 sigma^2 L max{1, 4 c_eps^2 L / (3 sigma^2 p phi N)} folded so the
  // sigma^2 = 0 corner stays finite.
  const double var_a = 72.0 * params.sigma_sq * log8;
  const double var_b = 96.0 * c_eps2 * log8 * log8 / (pt * phi1 * n);
  out.variance = std::max(var_a, var_b) / (pt * phi1 * (n - 1.0));

  const double phi2 = phi_at(out.eta_prime + 2.0 * out.chi);
  const double ratio_term = phi2 / phi1 - 1.0;
  const double cap_term =
      params.big_c * log8 * log8 / ((phi1 * (n - 1.0)) * (phi1 * (n - 1.0)));
  out.inflation =
      144.0 * c_eps2 / (pt * pt) * std::max(ratio_term * ratio_term, cap_term);

  out.total = out.bias_eta + out.bias_chi + out.variance + out.inflation;
  out.success_prob =
      1.0 - params.delta - 2.0 * std::exp(-pt * phi1 * (n - 1.0) / 16.0);
  return out;
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "discrete") return ScheduleKind::Discrete;
  if (s == "continuous-unit") return ScheduleKind::ContinuousUnit;
  if (s == "continuous-ate") return ScheduleKind::ContinuousAte;
  throw ConfigError("unknown schedule kind: '" + s + "'");
}

std::string schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Discrete: return "discrete";
    case ScheduleKind::ContinuousUnit: return "continuous-unit";
    case ScheduleKind::ContinuousAte: return "continuous-ate";
  }
  return "?";
}

double eta_schedule(ScheduleKind kind, const TheoryParams& params,
                    long long n_units, long long n_times, double beta) {
  const double beta_max = kind == ScheduleKind::ContinuousAte ? 0.25 : 0.5;
  if (!(beta >= 0.0 && beta <= beta_max)) {
    throw ArgumentError("eta_schedule: beta outside the admissible range");
  }
  TheoryParams p = params;
  p.delta = 1.0 / (static_cast<double>(n_units) * static_cast<double>(n_times));
  const double chi = err_term_chi(p, n_units, n_times);
  const double base = 2.0 * params.sigma_sq;
  const double t_pow = static_cast<double>(n_times);
  switch (kind) {
    case ScheduleKind::Discrete:
      return base + chi;
    case ScheduleKind::ContinuousUnit:
      return base + (1.0 + std::pow(t_pow, (1.0 - 2.0 * beta) / 6.0)) * chi;
    case ScheduleKind::ContinuousAte:
      return base +
             std::sqrt(2.0) * (1.0 + std::pow(t_pow, (1.0 + 2.0 * beta) / 6.0)) * chi;
  }
  throw ArgumentError("eta_schedule: unknown kind");
}

double oracle_rho_star(const LatentState& latent, double sigma_sq, int i, int j,
                       int a, const Eigen::MatrixXd& sigma_v) {
  if (a < 0 || a >= latent.num_actions()) {
    throw ArgumentError("oracle_rho_star: action out of range");
  }
  const auto& u = latent.unit_factors[a];
  if (i < 0 || i >= u.rows() || j < 0 || j >= u.rows()) {
    throw ArgumentError("oracle_rho_star: unit index out of range");
  }
  if (sigma_v.rows() != u.cols() || sigma_v.cols() != u.cols()) {
    throw ArgumentError("oracle_rho_star: sigma_v dimension mismatch");
  }
  const Eigen::VectorXd gap = (u.row(i) - u.row(j)).transpose();
  return gap.dot(sigma_v * gap) + 2.0 * sigma_sq;
}

}  // namespace seqcf
