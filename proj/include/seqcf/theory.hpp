#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "seqcf/model.hpp"
#include "seqcf/rng.hpp"

namespace seqcf {

/// Constants entering the error bounds. pmin_seq holds the minimum
/// exploration sequence p_min,t (a single entry means a constant sequence).
/// big_c is the unquantified universal constant; it defaults to 1.
struct TheoryParams {
  double c_u = 1.0;
  double c_v = 1.0;
  double c_eps = 1.0;
  double lambda_a = 1.0;
  double sigma_sq = 1.0;
  double delta = 0.1;
  double big_c = 1.0;
  std::vector<double> pmin_seq = {1.0};
  Eigen::MatrixXd sigma_v;  // optional; empty when unused

  double pmin_at(int t) const;  // t is a 1-based time index
  void validate() const;
};

/// Distance-estimation error term:
/// chi = 4 (c_v c_u + c_eps)^2 sqrt(2 log(4NT/delta)) / (p_min,T sqrt(T)).
double err_term_chi(const TheoryParams& params, long long n_units, long long n_times);

/// Neighbor-sampling probability for a uniform distribution over finite
/// support: the fraction of support points within squared Sigma_v-distance r
/// of u. Non-decreasing right-continuous step function of r.
double phi_discrete(const Eigen::MatrixXd& support, const Eigen::MatrixXd& sigma_v,
                    const Eigen::VectorXd& u, double r);

struct MonteCarloProbability {
  double estimate = 0.0;
  double std_error = 0.0;
  long long n_samples = 0;
};

/// Monte Carlo estimate of P(||u' - u||^2 <= r) for u' uniform on [0,1]^d.
MonteCarloProbability phi_continuous_mc(int d, const Eigen::VectorXd& u, double r,
                                        long long n_samples, RngStream& rng);

/// Term-by-term evaluation of the high-probability squared-error bound.
struct BoundEvaluation {
  bool applicable = false;
  std::string reason;      // why not applicable, empty otherwise
  double chi = 0.0;
  double eta_prime = 0.0;
  double bias_eta = 0.0;   // 2 c_v^2 (eta - 2 sigma^2) / lambda_a
  double bias_chi = 0.0;   // 2 c_v^2 chi / lambda_a
  double variance = 0.0;
  double inflation = 0.0;
  double total = 0.0;
  double success_prob = 0.0;
};

/// Evaluates the four-term bound at time t (1-based) with a user-supplied
/// neighbor-probability function r -> phi(r). Precondition failures flag the
/// result not-applicable instead of throwing.
BoundEvaluation thm1_bound(const TheoryParams& params, long long n_units,
                           long long n_times, int t, double eta,
                           const std::function<double(double)>& phi_at);

enum class ScheduleKind { Discrete, ContinuousUnit, ContinuousAte };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string schedule_kind_name(ScheduleKind k);

/// Threshold schedules from the asymptotic corollaries, with chi evaluated at
/// delta = 1/(NT):
///   discrete:        2 sigma^2 + chi
///   continuous-unit: 2 sigma^2 + (1 + T^((1-2 beta)/6)) chi
///   continuous-ate:  2 sigma^2 + sqrt(2) (1 + T^((1+2 beta)/6)) chi
double eta_schedule(ScheduleKind kind, const TheoryParams& params,
                    long long n_units, long long n_times, double beta);

/// Population distance rho* = ||u_i - u_j||^2_{Sigma_v} + 2 sigma^2
/// (simulation-only oracle; requires the latent factors).
double oracle_rho_star(const LatentState& latent, double sigma_sq, int i, int j,
                       int a, const Eigen::MatrixXd& sigma_v);

}  // namespace seqcf
