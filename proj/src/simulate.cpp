#include "seqcf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqcf/errors.hpp"

namespace seqcf {

namespace {

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / 2.5066282746310005024;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

/// Variance of N(0, s^2) conditioned on [-c, c].
double truncated_variance(double s, double c) {
  const double z = c / s;
  const double denom = 2.0 * std_normal_cdf(z) - 1.0;
  return s * s * (1.0 - 2.0 * z * std_normal_pdf(z) / denom);
}

}  // namespace

FactorSpec FactorSpec::discrete(Eigen::MatrixXd points) {
  FactorSpec f;
  f.kind = Kind::Discrete;
  f.support = std::move(points);
  f.validate();
  return f;
}

FactorSpec FactorSpec::uniform_box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  FactorSpec f;
  f.kind = Kind::UniformBox;
  f.lo = std::move(lo);
  f.hi = std::move(hi);
  f.validate();
  return f;
}

FactorSpec FactorSpec::unit_cube(int d) {
  return uniform_box(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
}

int FactorSpec::dim() const {
  return kind == Kind::Discrete ? static_cast<int>(support.cols())
                                : static_cast<int>(lo.size());
}

void FactorSpec::validate() const {
  if (kind == Kind::Discrete) {
    if (support.rows() < 1 || support.cols() < 1) {
      throw ConfigError("discrete factor spec: empty support");
    }
    if (!support.allFinite()) {
      throw ConfigError("discrete factor spec: non-finite support point");
    }
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < support.rows(); ++j) {
        if ((support.row(i) - support.row(j)).norm() == 0.0) {
          throw ConfigError("discrete factor spec: duplicate support points");
        }
      }
    }
  } else {
    if (lo.size() < 1 || lo.size() != hi.size()) {
      throw ConfigError("uniform factor spec: lo/hi dimensions inconsistent");
    }
    for (Eigen::Index k = 0; k < lo.size(); ++k) {
      if (!(lo[k] <= hi[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k])) {
        throw ConfigError("uniform factor spec: need finite lo <= hi");
      }
    }
  }
}

double FactorSpec::norm_bound() const {
  if (kind == Kind::Discrete) {
    double b = 0.0;
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
      b = std::max(b, support.row(i).norm());
    }
    return b;
  }
  // Farthest corner of the box.
  double s = 0.0;
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    const double m = std::max(std::abs(lo[k]), std::abs(hi[k]));
    s += m * m;
  }
  return std::sqrt(s);
}

Eigen::VectorXd FactorSpec::mean() const {
  if (kind == Kind::Discrete) {
    return support.colwise().mean();
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXd FactorSpec::second_moment() const {
  if (kind == Kind::Discrete) {
    return support.transpose() * support / static_cast<double>(support.rows());
  }
  // Independent coordinates: E[x_j x_k] = m_j m_k off-diagonal.
  const Eigen::VectorXd m = mean();
  Eigen::MatrixXd s = m * m.transpose();
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    const double w = hi[k] - lo[k];
    s(k, k) = m[k] * m[k] + w * w / 12.0;
  }
  return s;
}

const FactorSpec& LatentSpec::unit_spec(int a) const {
  return per_action_unit.empty() ? unit : per_action_unit.at(a);
}

const FactorSpec& LatentSpec::time_spec(int a) const {
  return per_action_time.empty() ? time : per_action_time.at(a);
}

double LatentSpec::unit_norm_bound(int action_count) const {
  if (c_u > 0.0) return c_u;
  double b = 0.0;
  for (int a = 0; a < action_count; ++a) b = std::max(b, unit_spec(a).norm_bound());
  return b;
}

double LatentSpec::time_norm_bound(int action_count) const {
  if (c_v > 0.0) return c_v;
  double b = 0.0;
  for (int a = 0; a < action_count; ++a) b = std::max(b, time_spec(a).norm_bound());
  return b;
}

void LatentSpec::validate(int action_count) const {
  if (d < 1) throw ConfigError("latent spec: d must be >= 1");
  if (!per_action_unit.empty() &&
      static_cast<int>(per_action_unit.size()) != action_count) {
    throw ConfigError("latent spec: per_action_unit size must equal |A|");
  }
  if (!per_action_time.empty() &&
      static_cast<int>(per_action_time.size()) != action_count) {
    throw ConfigError("latent spec: per_action_time size must equal |A|");
  }
  if (shared_across_actions && !per_action_unit.empty()) {
    throw ConfigError(
        "latent spec: shared_across_actions is incompatible with per-action "
        "unit specs");
  }
  for (int a = 0; a < action_count; ++a) {
    const FactorSpec& u = unit_spec(a);
    const FactorSpec& v = time_spec(a);
    u.validate();
    v.validate();
    if (u.dim() != d || v.dim() != d) {
      throw ConfigError("latent spec: factor dimension differs from d");
    }
    if (c_u > 0.0 && u.norm_bound() > c_u * (1.0 + 1e-12)) {
      throw ConfigError("latent spec: unit support exceeds configured c_u");
    }
    if (c_v > 0.0 && v.norm_bound() > c_v * (1.0 + 1e-12)) {
      throw ConfigError("latent spec: time support exceeds configured c_v");
    }
  }
  lookup_mean_fn(mean_fn);
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("noise spec: sigma must be finite and >= 0");
  }
  if (!(c_eps > 0.0) && sigma > 0.0) {
    throw ConfigError("noise spec: c_eps must be > 0");
  }
  if (sigma == 0.0) return;
  switch (distribution) {
    case Dist::TruncatedNormal:
      // Truncation caps the variance at c^2/3 (uniform limit).
      if (sigma * sigma >= c_eps * c_eps / 3.0) {
        throw ConfigError(
            "noise spec: truncated-normal requires sigma^2 < c_eps^2/3");
      }
      break;
    case Dist::Uniform:
      if (c_eps < std::sqrt(3.0) * sigma) {
        throw ConfigError("noise spec: uniform requires c_eps >= sqrt(3)*sigma");
      }
      break;
    case Dist::RademacherScaled:
      if (c_eps < sigma) {
        throw ConfigError("noise spec: rademacher requires c_eps >= sigma");
      }
      break;
  }
}

void PolicySpec::validate(int action_count) const {
  if (kind == Kind::Constant) {
    if (const_probs.size() != action_count) {
      throw ConfigError("constant policy: probability vector size must be |A|");
    }
    double s = 0.0;
    for (Eigen::Index a = 0; a < const_probs.size(); ++a) {
      if (const_probs[a] < 0.0) throw ConfigError("constant policy: negative probability");
      s += const_probs[a];
    }
    if (std::abs(s - 1.0) > 1e-12) {
      throw ConfigError("constant policy: probabilities must sum to 1");
    }
  } else {
    if (beta < 0.0) throw ConfigError("policy: beta must be >= 0");
    if (eps_floor < 0.0 || eps_floor > 1.0) {
      throw ConfigError("policy: eps_floor must lie in [0, 1]");
    }
    if (kind == Kind::ThompsonPooled && !(prior_var > 0.0 && obs_var > 0.0)) {
      throw ConfigError("thompson policy: prior_var and obs_var must be > 0");
    }
  }
}

double PolicySpec::epsilon_at(int t) const {
  return std::min(1.0, std::max(eps_floor, std::pow(static_cast<double>(t), -beta)));
}

double truncated_normal_base_scale(double sigma, double c) {
  const double target = sigma * sigma;
  double lo = sigma;  // truncation only removes variance
  double hi = sigma;
  while (truncated_variance(hi, c) < target) {
    hi *= 2.0;
    if (hi > 1e6 * sigma + 1e6) {
      throw ConfigError("truncated normal: target variance unattainable");
    }
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_variance(mid, c) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-10 * sigma) break;
  }
  return 0.5 * (lo + hi);
}

namespace {

Eigen::MatrixXd sample_factor_matrix(const FactorSpec& spec, int rows,
                                     RngStream& rng) {
  const int d = spec.dim();
  Eigen::MatrixXd out(rows, d);
  if (spec.kind == FactorSpec::Kind::Discrete) {
    const int m = static_cast<int>(spec.support.rows());
    for (int r = 0; r < rows; ++r) {
      out.row(r) = spec.support.row(
          static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m))));
    }
  } else {
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < d; ++k) {
        out(r, k) = spec.lo[k] + (spec.hi[k] - spec.lo[k]) * rng.uniform01();
      }
    }
  }
  return out;
}

double draw_noise(const NoiseSpec& spec, double base_scale, RngStream& rng) {
  switch (spec.distribution) {
    case NoiseSpec::Dist::TruncatedNormal: {
      double x;
      do {
        x = base_scale * rng.normal();
      } while (std::abs(x) > spec.c_eps);
      return x;
    }
    case NoiseSpec::Dist::Uniform: {
      const double half = std::sqrt(3.0) * spec.sigma;
      return half * (2.0 * rng.uniform01() - 1.0);
    }
    case NoiseSpec::Dist::RademacherScaled:
      return rng.uniform01() < 0.5 ? -spec.sigma : spec.sigma;
  }
  return 0.0;
}

/// Pooled empirical mean reward per arm over all units and past times.
/// Untried arms rank below every tried arm; ties break to the lowest index.
int pooled_greedy_arm(const HistoryView& h, int action_count) {
  std::vector<double> sum(action_count, 0.0);
  std::vector<long long> cnt(action_count, 0);
  for (int t = 0; t < h.t_count; ++t) {
    for (int i = 0; i < h.treatments.rows(); ++i) {
      const int a = h.treatments(i, t);
      sum[a] += h.outcomes(i, t);
      ++cnt[a];
    }
  }
  int best = 0;
  double best_mean = -std::numeric_limits<double>::infinity();
  bool best_tried = false;
  for (int a = 0; a < action_count; ++a) {
    const bool tried = cnt[a] > 0;
    const double mean = tried ? sum[a] / static_cast<double>(cnt[a])
                              : -std::numeric_limits<double>::infinity();
    if ((tried && !best_tried) || (tried == best_tried && mean > best_mean)) {
      best = a;
      best_mean = mean;
      best_tried = tried;
    }
  }
  return best;
}

Eigen::MatrixXd thompson_probs(const PolicySpec& spec, const HistoryView& h,
                               int t, int action_count) {
  // Gaussian-Gaussian conjugate posterior per arm on pooled rewards.
  std::vector<double> post_mean(action_count), post_var(action_count);
  for (int a = 0; a < action_count; ++a) {
    double sum = 0.0;
    long long cnt = 0;
    for (int tt = 0; tt < h.t_count; ++tt) {
      for (int i = 0; i < h.treatments.rows(); ++i) {
        if (h.treatments(i, tt) == a) {
          sum += h.outcomes(i, tt);
          ++cnt;
        }
      }
    }
    const double prec = 1.0 / spec.prior_var + static_cast<double>(cnt) / spec.obs_var;
    post_var[a] = 1.0 / prec;
    post_mean[a] = (spec.prior_mean / spec.prior_var + sum / spec.obs_var) / prec;
  }

  Eigen::VectorXd probs(action_count);
  if (action_count == 2) {
    const double gap = post_mean[0] - post_mean[1];
    const double s = std::sqrt(post_var[0] + post_var[1]);
    const double p0 = s > 0.0 ? std_normal_cdf(gap / s) : (gap > 0.0 ? 1.0 : 0.0);
    probs << p0, 1.0 - p0;
  } else {
    // Monte Carlo estimate of P(arm sample maximal). Seeded by (policy_seed,
    // t) so replays from the logged history are bit-exact.
    constexpr int kDraws = 1024;
    RngStream mc(mix64(spec.policy_seed), StreamRole::PolicyMc,
                 static_cast<std::uint64_t>(t));
    Eigen::VectorXd wins = Eigen::VectorXd::Zero(action_count);
    for (int rep = 0; rep < kDraws; ++rep) {
      int arg = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < action_count; ++a) {
        const double x = post_mean[a] + std::sqrt(post_var[a]) * mc.normal();
        if (x > best) {
          best = x;
          arg = a;
        }
      }
      wins[arg] += 1.0;
    }
    probs = wins / static_cast<double>(kDraws);
    // Keep rows exactly stochastic despite the MC rounding.
    probs /= probs.sum();
  }
  const int n = static_cast<int>(h.treatments.rows());
  Eigen::MatrixXd out(n, action_count);
  out.rowwise() = probs.transpose();
  return out;
}

}  // namespace

LatentState sample_latent(const LatentSpec& spec, int n_units, int n_times,
                          int action_count, std::uint64_t key) {
  if (n_units < 1 || n_times < 1) {
    throw ConfigError("sample_latent: N and T must be >= 1");
  }
  spec.validate(action_count);

  LatentState state;
  state.mean_fn = spec.mean_fn;
  state.unit_factors.reserve(action_count);
  state.time_factors.reserve(action_count);
  for (int a = 0; a < action_count; ++a) {
    if (spec.shared_across_actions && a > 0) {
      state.unit_factors.push_back(state.unit_factors[0]);
    } else {
      RngStream rng(key, StreamRole::LatentUnit, static_cast<std::uint64_t>(a));
      state.unit_factors.push_back(
          sample_factor_matrix(spec.unit_spec(a), n_units, rng));
    }
    RngStream rng(key, StreamRole::LatentTime, static_cast<std::uint64_t>(a));
    state.time_factors.push_back(
        sample_factor_matrix(spec.time_spec(a), n_times, rng));
  }
  state.validate(spec.unit_norm_bound(action_count),
                 spec.time_norm_bound(action_count));
  return state;
}

Eigen::MatrixXd policy_step(const PolicySpec& spec, const HistoryView& history,
                            int t, int action_count) {
  spec.validate(action_count);
  const int n = static_cast<int>(history.treatments.rows());
  Eigen::MatrixXd probs(n, action_count);

  switch (spec.kind) {
    case PolicySpec::Kind::Constant:
      probs.rowwise() = spec.const_probs.transpose();
      return probs;
    case PolicySpec::Kind::EpsGreedyUnit: {
      const double eps = spec.epsilon_at(t);
      probs.setConstant(eps / action_count);
      if (history.t_count == 0) {
        probs.setConstant(1.0 / action_count);
        return probs;
      }
      for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_mean = -std::numeric_limits<double>::infinity();
        bool best_tried = false;
        for (int a = 0; a < action_count; ++a) {
          double sum = 0.0;
          long long cnt = 0;
          for (int tt = 0; tt < history.t_count; ++tt) {
            if (history.treatments(i, tt) == a) {
              sum += history.outcomes(i, tt);
              ++cnt;
            }
          }
          const bool tried = cnt > 0;
          const double mean = tried ? sum / static_cast<double>(cnt)
                                    : -std::numeric_limits<double>::infinity();
          if ((tried && !best_tried) || (tried == best_tried && mean > best_mean)) {
            best = a;
            best_mean = mean;
            best_tried = tried;
          }
        }
        probs(i, best) += 1.0 - eps;
      }
      return probs;
    }
    case PolicySpec::Kind::EpsGreedyPooled: {
      if (history.t_count == 0) {
        probs.setConstant(1.0 / action_count);
        return probs;
      }
      const double eps = spec.epsilon_at(t);
      const int greedy = pooled_greedy_arm(history, action_count);
      probs.setConstant(eps / action_count);
      probs.col(greedy).array() += 1.0 - eps;
      return probs;
    }
    case PolicySpec::Kind::ThompsonPooled:
      if (history.t_count == 0) {
        probs.setConstant(1.0 / action_count);
        return probs;
      }
      return thompson_probs(spec, history, t, action_count);
  }
  throw ConfigError("policy_step: unknown policy kind");
}

ExperimentLog run_experiment(const LatentState& latent, const NoiseSpec& noise,
                             const PolicySpec& policy, std::uint64_t key) {
  noise.validate();
  const int n = latent.num_units();
  const int t_count = latent.num_times();
  const int a_count = latent.num_actions();
  policy.validate(a_count);

  const MeanTensor theta = build_mean_tensor(latent);

  ExperimentLog log;
  log.treatments.setZero(n, t_count);
  log.outcomes.setZero(n, t_count);
  log.assign_probs.assign(a_count, Eigen::MatrixXd::Zero(n, t_count));
  log.noise_bound = noise.c_eps;
  log.noise_sd = noise.sigma;

  const double base_scale =
      (noise.sigma > 0.0 && noise.distribution == NoiseSpec::Dist::TruncatedNormal)
          ? truncated_normal_base_scale(noise.sigma, noise.c_eps)
          : 0.0;

  RngStream treatment_rng(key, StreamRole::Treatment);
  RngStream noise_rng(key, StreamRole::Noise);

  // The policy is adaptive, so time steps run strictly in order.
  for (int t = 0; t < t_count; ++t) {
    const HistoryView history{log.treatments, log.outcomes, t};
    const Eigen::MatrixXd probs = policy_step(policy, history, t + 1, a_count);
    for (int a = 0; a < a_count; ++a) {
      log.assign_probs[a].col(t) = probs.col(a);
    }
    for (int i = 0; i < n; ++i) {
      const double u = treatment_rng.uniform01();
      double acc = 0.0;
      int chosen = a_count - 1;
      for (int a = 0; a < a_count; ++a) {
        acc += probs(i, a);
        if (u < acc) {
          chosen = a;
          break;
        }
      }
      log.treatments(i, t) = chosen;
      const double eps =
          noise.sigma > 0.0 ? draw_noise(noise, base_scale, noise_rng) : 0.0;
      log.outcomes(i, t) = theta.at(i, t, chosen) + eps;
    }
  }
  return log;
}

}  // namespace seqcf
