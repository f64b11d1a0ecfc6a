#include "seqcf/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqcf/errors.hpp"
#include "seqcf/rng.hpp"

namespace seqcf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_indices(const ExperimentLog& log, int i, int t, int a) {
  if (i < 0 || i >= log.num_units()) throw ArgumentError("unit index out of range");
  if (t < 0 || t >= log.num_times()) throw ArgumentError("time index out of range");
  if (a < 0 || a >= log.num_actions()) throw ArgumentError("action out of range");
}

/// Mean of all observed outcomes under action a across the whole log.
/// Returns false when the arm never appears.
bool global_arm_mean(const ExperimentLog& log, int a, double* out) {
  double sum = 0.0;
  long long cnt = 0;
  const int n = log.num_units();
  const int t_count = log.num_times();
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_count; ++t) {
      if (log.treatments(i, t) == a) {
        sum += log.outcomes(i, t);
        ++cnt;
      }
    }
  }
  if (cnt == 0) return false;
  *out = sum / static_cast<double>(cnt);
  return true;
}

}  // namespace

void EstimatorSettings::validate() const {
  if (!std::isfinite(eta)) throw ConfigError("estimator settings: eta must be finite");
  if (action < 0) throw ConfigError("estimator settings: action must be >= 0");
  if (cap && *cap < 1) throw ConfigError("estimator settings: cap must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("estimator settings: alpha must lie in (0, 1)");
  }
  if (subsample_k && *subsample_k < 2) {
    throw ConfigError("estimator settings: subsample_k must be >= 2");
  }
}

const char* fallback_name(Fallback f) {
  switch (f) {
    case Fallback::None: return "none";
    case Fallback::SelfObservation: return "self-observation";
    case Fallback::ColumnMean: return "column-mean";
    case Fallback::GlobalMean: return "global-mean";
  }
  return "?";
}

std::vector<int> all_times(int t_count) {
  std::vector<int> w(t_count);
  for (int t = 0; t < t_count; ++t) w[t] = t;
  return w;
}

namespace {

/// Compressed window slices, time-major so each unit's slice is contiguous;
/// the 0/1 mask keeps the pair loop branch-free.
void compress_window(const ExperimentLog& log, int a, const std::vector<int>& window,
                     Eigen::MatrixXd* y, Eigen::MatrixXd* m) {
  const int n = log.num_units();
  const int t_count = log.num_times();
  const int w = static_cast<int>(window.size());
  y->resize(w, n);
  m->resize(w, n);
  for (int c = 0; c < w; ++c) {
    const int t = window[c];
    if (t < 0 || t >= t_count) {
      throw ArgumentError("pairwise_distance: window time out of range");
    }
    if (c > 0 && window[c] <= window[c - 1]) {
      throw ArgumentError("pairwise_distance: window must be ascending");
    }
    for (int i = 0; i < n; ++i) {
      const bool hit = log.treatments(i, t) == a;
      (*m)(c, i) = hit ? 1.0 : 0.0;
      (*y)(c, i) = hit ? log.outcomes(i, t) : 0.0;
    }
  }
}

/// Adds the window slice [c0, c1) into the running per-pair accumulators.
/// Each pair's chain stays in ascending time order across calls; splitting
/// the range never regroups the sums.
void accumulate_pairs(const Eigen::MatrixXd& y, const Eigen::MatrixXd& m, int c0,
                      int c1, Eigen::MatrixXd* sum_sq, Eigen::MatrixXd* count) {
  const int n = static_cast<int>(y.cols());
  for (int i = 0; i < n; ++i) {
    const double* yi = y.col(i).data();
    const double* mi = m.col(i).data();
    for (int j = i + 1; j < n; ++j) {
      const double* yj = y.col(j).data();
      const double* mj = m.col(j).data();
      double s = (*sum_sq)(i, j);
      double cnt = (*count)(i, j);
      for (int c = c0; c < c1; ++c) {
        const double both = mi[c] * mj[c];
        const double diff = yi[c] - yj[c];
        s += both * diff * diff;
        cnt += both;
      }
      (*sum_sq)(i, j) = s;
      (*count)(i, j) = cnt;
    }
  }
}

DistanceMatrix finalize_distance(const Eigen::MatrixXd& sum_sq,
                                 const Eigen::MatrixXd& count,
                                 const Eigen::MatrixXd& m, int w,
                                 std::vector<int> window) {
  const int n = static_cast<int>(sum_sq.rows());
  DistanceMatrix out;
  out.time_window = std::move(window);
  out.rho.setZero(n, n);
  out.overlap.setZero(n, n);
  for (int i = 0; i < n; ++i) {
    out.overlap(i, i) = static_cast<int>(m.col(i).head(w).sum());
    for (int j = i + 1; j < n; ++j) {
      const int ov = static_cast<int>(count(i, j));
      out.overlap(i, j) = ov;
      out.overlap(j, i) = ov;
      const double rho = ov > 0 ? sum_sq(i, j) / count(i, j) : kInf;
      out.rho(i, j) = rho;
      out.rho(j, i) = rho;
    }
  }
  return out;
}

}  // namespace

DistanceMatrix pairwise_distance(const ExperimentLog& log, int a,
                                 const std::vector<int>& window) {
  if (a < 0 || a >= log.num_actions()) {
    throw ArgumentError("pairwise_distance: action out of range");
  }
  if (window.empty()) {
    throw ArgumentError("pairwise_distance: empty time window");
  }
  const int n = log.num_units();
  const int w = static_cast<int>(window.size());
  Eigen::MatrixXd y, m;
  compress_window(log, a, window, &y, &m);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(n, n);
  accumulate_pairs(y, m, 0, w, &sum_sq, &count);
  return finalize_distance(sum_sq, count, m, w, window);
}

DistanceSplit pairwise_distance_split(const ExperimentLog& log, int a,
                                      int t1_count) {
  const int t_count = log.num_times();
  if (t1_count < 1 || t1_count >= t_count) {
    throw ArgumentError("pairwise_distance_split: need 1 <= t1_count < T");
  }
  const std::vector<int> window = all_times(t_count);
  const int n = log.num_units();
  Eigen::MatrixXd y, m;
  compress_window(log, a, window, &y, &m);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(n, n);

  DistanceSplit out;
  accumulate_pairs(y, m, 0, t1_count, &sum_sq, &count);
  out.head = finalize_distance(sum_sq, count, m, t1_count,
                               std::vector<int>(window.begin(),
                                                window.begin() + t1_count));
  accumulate_pairs(y, m, t1_count, t_count, &sum_sq, &count);
  out.full = finalize_distance(sum_sq, count, m, t_count, window);
  return out;
}

std::vector<int> neighbor_set(const DistanceMatrix& dist,
                              const ExperimentLog& log, int i, int t,
                              const EstimatorSettings& settings) {
  check_indices(log, i, t, settings.action);
  const int n = dist.num_units();
  std::vector<int> nbrs;
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    if (log.treatments(j, t) == settings.action && dist.rho(i, j) <= settings.eta) {
      nbrs.push_back(j);
    }
  }
  return nbrs;
}

Estimate nn_estimate(const ExperimentLog& log, const DistanceMatrix& dist,
                     int i, int t, const EstimatorSettings& settings,
                     std::uint64_t cell_key) {
  settings.validate();
  const int a = settings.action;
  std::vector<int> nbrs = neighbor_set(dist, log, i, t, settings);

  Estimate est;
  if (!nbrs.empty()) {
    if (settings.cap && static_cast<int>(nbrs.size()) > *settings.cap) {
      RngStream rng(cell_key, StreamRole::CapSample,
                    (static_cast<std::uint64_t>(i) << 28) ^
                        static_cast<std::uint64_t>(t));
      const std::vector<int> pick = rng.sample_without_replacement(
          static_cast<int>(nbrs.size()), *settings.cap);
      std::vector<int> capped;
      capped.reserve(pick.size());
      for (int idx : pick) capped.push_back(nbrs[idx]);
      nbrs.swap(capped);
    }
    double sum = 0.0;
    for (int j : nbrs) sum += log.outcomes(j, t);
    est.value = sum / static_cast<double>(nbrs.size());
    est.neighbor_count = static_cast<int>(nbrs.size());
    est.fallback = Fallback::None;
    return est;
  }

  est.neighbor_count = 0;
  if (log.treatments(i, t) == a) {
    est.value = log.outcomes(i, t);
    est.fallback = Fallback::SelfObservation;
    return est;
  }
  double sum = 0.0;
  int cnt = 0;
  for (int j = 0; j < log.num_units(); ++j) {
    if (log.treatments(j, t) == a) {
      sum += log.outcomes(j, t);
      ++cnt;
    }
  }
  if (cnt > 0) {
    est.value = sum / static_cast<double>(cnt);
    est.fallback = Fallback::ColumnMean;
    return est;
  }
  double g = 0.0;
  if (!global_arm_mean(log, a, &g)) {
    throw EstimationError("nn_estimate: action never assigned in the log");
  }
  est.value = g;
  est.fallback = Fallback::GlobalMean;
  return est;
}

std::vector<Estimate> estimate_all(const ExperimentLog& log,
                                   const DistanceMatrix& dist,
                                   const EstimatorSettings& settings,
                                   std::uint64_t cell_key) {
  settings.validate();
  const int n = log.num_units();
  const int t_count = log.num_times();
  const int a = settings.action;
  if (a >= log.num_actions()) {
    throw ArgumentError("estimate_all: action out of range");
  }

  double global_mean = 0.0;
  const bool arm_seen = global_arm_mean(log, a, &global_mean);
  if (!arm_seen) {
    throw EstimationError("estimate_all: action never assigned in the log");
  }

  std::vector<Estimate> out(static_cast<std::size_t>(n) * t_count);
  if (settings.cap.has_value()) {
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < t_count; ++t) {
        out[static_cast<std::size_t>(i) * t_count + t] =
            nn_estimate(log, dist, i, t, settings, cell_key);
      }
    }
    return out;
  }

  // Uncapped batch path: neighbor sums for every (i, t) are one masked
  // matrix product. W thresholds rho (the diagonal enters and is subtracted
  // afterwards), Y/M are the treated outcomes and indicators.
  Eigen::MatrixXd ym = Eigen::MatrixXd::Zero(n, t_count);
  Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(n, t_count);
  for (int t = 0; t < t_count; ++t) {
    for (int j = 0; j < n; ++j) {
      if (log.treatments(j, t) == a) {
        ym(j, t) = log.outcomes(j, t);
        mm(j, t) = 1.0;
      }
    }
  }
  const Eigen::MatrixXd w =
      (dist.rho.array() <= settings.eta).cast<double>().matrix();
  const Eigen::MatrixXd num = w * ym;
  const Eigen::MatrixXd cnt = w * mm;
  const bool self_in = settings.eta >= 0.0;  // rho(i,i) = 0
  const Eigen::VectorXd col_sum = ym.colwise().sum();
  const Eigen::VectorXd col_cnt = mm.colwise().sum();

  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_count; ++t) {
      const bool treated_self = log.treatments(i, t) == a;
      double s = num(i, t);
      long long c = static_cast<long long>(cnt(i, t) + 0.5);
      if (self_in && treated_self) {
        s -= log.outcomes(i, t);
        c -= 1;
      }
      Estimate& est = out[static_cast<std::size_t>(i) * t_count + t];
      if (c > 0) {
        est.value = s / static_cast<double>(c);
        est.neighbor_count = static_cast<int>(c);
        est.fallback = Fallback::None;
      } else if (treated_self) {
        est.value = log.outcomes(i, t);
        est.fallback = Fallback::SelfObservation;
      } else if (col_cnt(t) > 0.0) {
        est.value = col_sum(t) / col_cnt(t);
        est.fallback = Fallback::ColumnMean;
      } else {
        est.value = global_mean;
        est.fallback = Fallback::GlobalMean;
      }
    }
  }
  return out;
}

}  // namespace seqcf
