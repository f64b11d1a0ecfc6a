#include "seqcf/model.hpp"

#include <cmath>

#include "seqcf/errors.hpp"

namespace seqcf {

ActionSet::ActionSet(int n) : count(n) {
  if (n < 1) throw ConfigError("ActionSet: count must be >= 1");
}

void LatentState::validate(double c_u, double c_v) const {
  if (unit_factors.empty() || time_factors.empty()) {
    throw ConfigError("LatentState: no factors");
  }
  if (unit_factors.size() != time_factors.size()) {
    throw ConfigError("LatentState: unit/time action counts differ");
  }
  const int d = dim();
  for (const auto& u : unit_factors) {
    if (u.cols() != d || u.rows() != unit_factors[0].rows()) {
      throw ConfigError("LatentState: inconsistent unit factor dimensions");
    }
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (!u.row(i).allFinite()) throw ConfigError("LatentState: non-finite unit factor");
      if (u.row(i).norm() > c_u * (1.0 + 1e-12)) {
        throw ConfigError("LatentState: unit factor norm exceeds c_u");
      }
    }
  }
  for (const auto& v : time_factors) {
    if (v.cols() != d || v.rows() != time_factors[0].rows()) {
      throw ConfigError("LatentState: inconsistent time factor dimensions");
    }
    for (Eigen::Index t = 0; t < v.rows(); ++t) {
      if (!v.row(t).allFinite()) throw ConfigError("LatentState: non-finite time factor");
      if (v.row(t).norm() > c_v * (1.0 + 1e-12)) {
        throw ConfigError("LatentState: time factor norm exceeds c_v");
      }
    }
  }
  lookup_mean_fn(mean_fn);
}

void ExperimentLog::validate() const {
  const int n = num_units();
  const int t_count = num_times();
  const int a_count = num_actions();
  if (a_count < 1) throw ConfigError("ExperimentLog: no actions");
  if (outcomes.rows() != n || outcomes.cols() != t_count) {
    throw ConfigError("ExperimentLog: outcome dimensions differ from treatments");
  }
  for (const auto& p : assign_probs) {
    if (p.rows() != n || p.cols() != t_count) {
      throw ConfigError("ExperimentLog: assign_probs dimensions mismatch");
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_count; ++t) {
      const int a = treatments(i, t);
      if (a < 0 || a >= a_count) {
        throw ConfigError("ExperimentLog: treatment index out of range");
      }
      double row_sum = 0.0;
      for (int b = 0; b < a_count; ++b) {
        const double p = assign_probs[b](i, t);
        if (p < 0.0 || p > 1.0) {
          throw ConfigError("ExperimentLog: probability outside [0, 1]");
        }
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > 1e-12) {
        throw ConfigError("ExperimentLog: probability row does not sum to 1");
      }
    }
  }
}

MeanFn lookup_mean_fn(const std::string& id) {
  if (id == "bilinear") {
    return [](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
      return u.dot(v);
    };
  }
  if (id == "norm-distance") {
    return [](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
      return (u - v).norm();
    };
  }
  if (id == "sigmoid-inner-product") {
    return [](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
      return 1.0 / (1.0 + std::exp(-u.dot(v)));
    };
  }
  throw ConfigError("unknown mean function id: '" + id + "'");
}

MeanTensor build_mean_tensor(const LatentState& latent) {
  const int n = latent.num_units();
  const int t_count = latent.num_times();
  const int a_count = latent.num_actions();

  MeanTensor out;
  out.theta.reserve(a_count);
  if (latent.mean_fn == "bilinear") {
    // Scalar dot products in fixed coordinate order: each entry depends only
    // on its own factor pair, so permuting units permutes theta bit-exactly.
    const int d = latent.dim();
    for (int a = 0; a < a_count; ++a) {
      const Eigen::MatrixXd& u = latent.unit_factors[a];
      const Eigen::MatrixXd& v = latent.time_factors[a];
      Eigen::MatrixXd th(n, t_count);
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < t_count; ++t) {
          double dot = 0.0;
          for (int k = 0; k < d; ++k) dot += u(i, k) * v(t, k);
          th(i, t) = dot;
        }
      }
      out.theta.push_back(std::move(th));
    }
  } else {
    const MeanFn f = lookup_mean_fn(latent.mean_fn);
    for (int a = 0; a < a_count; ++a) {
      Eigen::MatrixXd th(n, t_count);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd u = latent.unit_factors[a].row(i);
        for (int t = 0; t < t_count; ++t) {
          th(i, t) = f(u, latent.time_factors[a].row(t));
        }
      }
      out.theta.push_back(std::move(th));
    }
  }
  for (const auto& th : out.theta) {
    if (!th.allFinite()) throw ConfigError("build_mean_tensor: non-finite mean");
  }
  return out;
}

double realized_pmin(const ExperimentLog& log, int a, int t) {
  if (a < 0 || a >= log.num_actions()) {
    throw ArgumentError("realized_pmin: action out of range");
  }
  if (t < 1 || t > log.num_times()) {
    throw ArgumentError("realized_pmin: time index out of range");
  }
  return log.assign_probs[a].leftCols(t).minCoeff();
}

}  // namespace seqcf
