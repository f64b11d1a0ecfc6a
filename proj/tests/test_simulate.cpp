#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "seqcf/errors.hpp"
#include "seqcf/simulate.hpp"

using namespace seqcf;

namespace {

LatentSpec basic_spec(int d) {
  LatentSpec spec;
  spec.d = d;
  spec.unit = FactorSpec::unit_cube(d);
  spec.time = FactorSpec::unit_cube(d);
  return spec;
}

PolicySpec constant_policy(double p, int actions) {
  PolicySpec pol;
  pol.kind = PolicySpec::Kind::Constant;
  pol.const_probs = Eigen::VectorXd::Constant(actions, (1.0 - p) / (actions - 1));
  pol.const_probs[0] = p;
  return pol;
}

}  // namespace

TEST_CASE("discrete latent sampling with a single support point") {
  LatentSpec spec = basic_spec(2);
  Eigen::MatrixXd pt(1, 2);
  pt << 0.3, 0.7;
  spec.unit = FactorSpec::discrete(pt);
  const LatentState s = sample_latent(spec, 50, 4, 1, derive_key(1, 0));
  for (int i = 0; i < 50; ++i) {
    CHECK(s.unit_factors[0](i, 0) == 0.3);
    CHECK(s.unit_factors[0](i, 1) == 0.7);
  }
}

TEST_CASE("discrete latent sampling hits each support point uniformly") {
  LatentSpec spec = basic_spec(1);
  Eigen::MatrixXd pts(5, 1);
  pts << 0.1, 0.3, 0.5, 0.7, 0.9;
  spec.unit = FactorSpec::discrete(pts);
  const int n = 10000;
  const LatentState s = sample_latent(spec, n, 2, 1, derive_key(2, 0));
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 5; ++k) {
      if (s.unit_factors[0](i, 0) == pts(k, 0)) freq[k] += 1.0;
    }
  }
  freq /= n;
  for (int k = 0; k < 5; ++k) {
    CHECK(freq[k] >= 0.17);
    CHECK(freq[k] <= 0.23);
  }
}

TEST_CASE("continuous latent factors stay inside the unit cube") {
  LatentSpec spec = basic_spec(2);
  const LatentState s = sample_latent(spec, 200, 100, 2, derive_key(3, 0));
  for (int a = 0; a < 2; ++a) {
    CHECK(s.unit_factors[a].minCoeff() >= 0.0);
    CHECK(s.unit_factors[a].maxCoeff() <= 1.0);
    CHECK(s.time_factors[a].minCoeff() >= 0.0);
    CHECK(s.time_factors[a].maxCoeff() <= 1.0);
  }
}

TEST_CASE("duplicate support points are rejected") {
  Eigen::MatrixXd pts(2, 2);
  pts << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(FactorSpec::discrete(pts), ConfigError);
}

TEST_CASE("shared unit factors are identical across actions") {
  LatentSpec spec = basic_spec(2);
  spec.shared_across_actions = true;
  const LatentState s = sample_latent(spec, 20, 5, 3, derive_key(4, 0));
  CHECK((s.unit_factors[0] - s.unit_factors[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.unit_factors[0] - s.unit_factors[2]).cwiseAbs().maxCoeff() == 0.0);
  // Time factors remain action specific.
  CHECK((s.time_factors[0] - s.time_factors[1]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("constant policy emits the configured rows") {
  Eigen::MatrixXi treatments(3, 0);
  Eigen::MatrixXd outcomes(3, 0);
  HistoryView h{treatments, outcomes, 0};
  const Eigen::MatrixXd probs = policy_step(constant_policy(0.5, 2), h, 1, 2);
  for (int i = 0; i < 3; ++i) {
    CHECK(probs(i, 0) == 0.5);
    CHECK(probs(i, 1) == 0.5);
  }
}

TEST_CASE("pooled epsilon-greedy splits mass toward the better arm") {
  // Arm 1 carries the larger pooled mean reward; eps = 0.2 via the floor.
  Eigen::MatrixXi treatments(2, 2);
  treatments << 0, 1, 1, 0;
  Eigen::MatrixXd outcomes(2, 2);
  outcomes << 0.1, 5.0, 4.0, 0.2;
  HistoryView h{treatments, outcomes, 2};
  PolicySpec pol;
  pol.kind = PolicySpec::Kind::EpsGreedyPooled;
  pol.beta = 1.0;
  pol.eps_floor = 0.2;
  const Eigen::MatrixXd probs = policy_step(pol, h, 10, 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(probs(i, 0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(probs(i, 1) == doctest::Approx(0.9).epsilon(1e-14));
  }
}

TEST_CASE("adaptive policies are uniform at the cold start") {
  Eigen::MatrixXi treatments(4, 0);
  Eigen::MatrixXd outcomes(4, 0);
  HistoryView h{treatments, outcomes, 0};
  for (auto kind : {PolicySpec::Kind::EpsGreedyUnit, PolicySpec::Kind::EpsGreedyPooled,
                    PolicySpec::Kind::ThompsonPooled}) {
    PolicySpec pol;
    pol.kind = kind;
    pol.beta = 0.25;
    const Eigen::MatrixXd probs = policy_step(pol, h, 1, 3);
    for (int i = 0; i < 4; ++i) {
      for (int a = 0; a < 3; ++a) {
        CHECK(probs(i, a) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("single-arm experiments observe theta plus noise") {
  LatentSpec spec = basic_spec(2);
  const LatentState latent = sample_latent(spec, 10, 8, 1, derive_key(5, 0));
  NoiseSpec noise;
  noise.sigma = 0.0;
  PolicySpec pol;
  pol.kind = PolicySpec::Kind::Constant;
  pol.const_probs = Eigen::VectorXd::Ones(1);
  const ExperimentLog log = run_experiment(latent, noise, pol, derive_key(5, 1));
  const MeanTensor theta = build_mean_tensor(latent);
  for (int i = 0; i < 10; ++i) {
    for (int t = 0; t < 8; ++t) {
      CHECK(log.treatments(i, t) == 0);
      CHECK(log.outcomes(i, t) == theta.at(i, t, 0));
    }
  }
}

TEST_CASE("identical seeds reproduce the log bit for bit") {
  LatentSpec spec = basic_spec(2);
  const LatentState latent = sample_latent(spec, 6, 6, 2, derive_key(6, 0));
  NoiseSpec noise;
  noise.sigma = 0.5;
  noise.c_eps = 2.0;
  const PolicySpec pol = constant_policy(0.5, 2);
  const ExperimentLog a = run_experiment(latent, noise, pol, derive_key(6, 1));
  const ExperimentLog b = run_experiment(latent, noise, pol, derive_key(6, 1));
  const ExperimentLog c = run_experiment(latent, noise, pol, derive_key(6, 2));
  CHECK((a.outcomes - b.outcomes).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.treatments - b.treatments).cwiseAbs().maxCoeff() == 0);
  CHECK((a.outcomes - c.outcomes).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("replaying the policy from the logged history matches assign_probs") {
  LatentSpec spec = basic_spec(2);
  const LatentState latent = sample_latent(spec, 8, 12, 3, derive_key(7, 0));
  NoiseSpec noise;
  noise.sigma = 0.3;
  noise.c_eps = 1.2;

  PolicySpec pol;
  pol.kind = PolicySpec::Kind::EpsGreedyPooled;
  pol.beta = 0.25;
  pol.eps_floor = 0.05;

  SUBCASE("thompson with three arms") {
    pol.kind = PolicySpec::Kind::ThompsonPooled;
    pol.policy_seed = 99;
  }

  const ExperimentLog log = run_experiment(latent, noise, pol, derive_key(7, 1));
  for (int t = 0; t < log.num_times(); ++t) {
    HistoryView h{log.treatments, log.outcomes, t};
    const Eigen::MatrixXd probs = policy_step(pol, h, t + 1, 3);
    for (int a = 0; a < 3; ++a) {
      for (int i = 0; i < log.num_units(); ++i) {
        CHECK(log.assign_probs[a](i, t) == probs(i, a));
      }
    }
  }
}

TEST_CASE("constant-policy treatment counts concentrate") {
  LatentSpec spec = basic_spec(1);
  const int t_count = 10000;
  const double p = 0.3;
  const LatentState latent = sample_latent(spec, 3, t_count, 2, derive_key(8, 0));
  NoiseSpec noise;
  noise.sigma = 0.0;
  const ExperimentLog log =
      run_experiment(latent, noise, constant_policy(p, 2), derive_key(8, 1));
  const double slack = 4.0 * std::sqrt(t_count * p * (1.0 - p));
  for (int i = 0; i < 3; ++i) {
    int count = 0;
    for (int t = 0; t < t_count; ++t) count += log.treatments(i, t) == 0 ? 1 : 0;
    CHECK(std::abs(count - p * t_count) <= slack);
  }
}

TEST_CASE("noise sample moments match sigma for every distribution") {
  LatentSpec spec = basic_spec(1);
  Eigen::MatrixXd pt(1, 1);
  pt << 0.0;
  spec.unit = FactorSpec::discrete(pt);  // theta = 0, outcomes are pure noise
  spec.time = FactorSpec::uniform_box(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  const int n = 100, t_count = 2000;
  const double sigma = 0.7;
  const LatentState latent = sample_latent(spec, n, t_count, 1, derive_key(9, 0));
  PolicySpec pol;
  pol.kind = PolicySpec::Kind::Constant;
  pol.const_probs = Eigen::VectorXd::Ones(1);

  int variant = 0;
  for (auto dist : {NoiseSpec::Dist::TruncatedNormal, NoiseSpec::Dist::Uniform,
                    NoiseSpec::Dist::RademacherScaled}) {
    NoiseSpec noise;
    noise.sigma = sigma;
    noise.c_eps = 4.0 * sigma;
    noise.distribution = dist;
    const ExperimentLog log =
        run_experiment(latent, noise, pol, derive_key(9, 1 + variant++));
    const double cells = static_cast<double>(n) * t_count;
    const double mean = log.outcomes.sum() / cells;
    const double var = log.outcomes.array().square().sum() / cells - mean * mean;
    CHECK(log.outcomes.cwiseAbs().maxCoeff() <= noise.c_eps);
    CHECK(std::abs(mean) <= 4.0 * sigma / std::sqrt(cells));
    CHECK(std::abs(var - sigma * sigma) <= 8.0 * sigma * sigma / std::sqrt(cells));
  }
}

TEST_CASE("truncated normal base scale reproduces the target variance") {
  const double s = truncated_normal_base_scale(1.0, 2.5);
  CHECK(s > 1.0);
  // Quadrature check of the truncated second moment.
  const int grid = 200000;
  double mass = 0.0, second = 0.0;
  for (int k = 0; k < grid; ++k) {
    const double x = -2.5 + 5.0 * (k + 0.5) / grid;
    const double w = std::exp(-0.5 * x * x / (s * s));
    mass += w;
    second += w * x * x;
  }
  CHECK(second / mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("epsilon floor bounds the realized pmin from below") {
  LatentSpec spec = basic_spec(2);
  const LatentState latent = sample_latent(spec, 12, 64, 2, derive_key(10, 0));
  NoiseSpec noise;
  noise.sigma = 0.4;
  noise.c_eps = 1.6;
  PolicySpec pol;
  pol.kind = PolicySpec::Kind::EpsGreedyPooled;
  pol.beta = 0.5;
  pol.eps_floor = 0.1;
  const ExperimentLog log = run_experiment(latent, noise, pol, derive_key(10, 1));
  for (int a = 0; a < 2; ++a) {
    CHECK(realized_pmin(log, a, 64) >= 0.1 / 2 - 1e-15);
  }
}

TEST_CASE("noise spec validation enforces attainable variances") {
  NoiseSpec bad;
  bad.sigma = 1.0;
  bad.c_eps = 1.5;  // below sqrt(3)
  bad.distribution = NoiseSpec::Dist::TruncatedNormal;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.distribution = NoiseSpec::Dist::Uniform;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.distribution = NoiseSpec::Dist::RademacherScaled;
  CHECK_NOTHROW(bad.validate());
}
