#include <cmath>

#include "doctest.h"
#include "ntklab/bounds.hpp"
#include "ntklab/errors.hpp"
#include "ntklab/rng.hpp"
#include "oracles.hpp"

using namespace ntklab;

namespace {

// PSD summary straight from gradient rows G: NTK = G G^T.
NtkSummary random_psd_system(Rng& rng, int m, int d, Eigen::MatrixXd* g_out = nullptr) {
  Eigen::MatrixXd g(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  if (g_out != nullptr) *g_out = g;
  return ntk_from_gradients(g);
}

}  // namespace

TEST_CASE("realizable score is the reciprocal metric") {
  CHECK(realizable_score(1.0) == 1.0);
  CHECK(realizable_score(2.0) == 0.5);
  CHECK_THROWS_AS(realizable_score(0.0), ConfigError);
  CHECK_THROWS_AS(realizable_score(-1.0), ConfigError);

  // Argmin of the score equals argmax of the metric over random pools.
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> metrics;
    for (int i = 0; i < 50; ++i) metrics.push_back(0.01 + rng.uniform() * 10.0);
    std::size_t argmin = 0, argmax = 0;
    for (std::size_t i = 1; i < metrics.size(); ++i) {
      if (realizable_score(metrics[i]) < realizable_score(metrics[argmin])) argmin = i;
      if (metrics[i] > metrics[argmax]) argmax = i;
    }
    CHECK(argmin == argmax);
  }
}

TEST_CASE("non-realizable score") {
  SUBCASE("direct substitution") {
    const BoundParams params{.eta = 1.0, .c = 1.0, .t = 1, .m = 2};
    CHECK(nonrealizable_score(1.0, 1.0, params) == doctest::Approx(1.25).epsilon(1e-15));
  }
  SUBCASE("geometric decay to kappa/M") {
    const double m = 4.0, eta = 1.0, c = 1.0, metric = 1.5, kappa = 3.0;
    REQUIRE(eta * metric * metric / (m * c) < 2.0);
    const BoundParams late{.eta = eta, .c = c, .t = 4000, .m = 4};
    CHECK(nonrealizable_score(metric, kappa, late) ==
          doctest::Approx(kappa / metric).epsilon(1e-12));
  }
  SUBCASE("decreasing in M inside the contraction band") {
    const BoundParams params{.eta = 1.0, .c = 1.0, .t = 2, .m = 8};
    const double edge = std::sqrt(params.m * params.c / params.eta);
    double prev = nonrealizable_score(1e-3, 2.0, params);
    for (int i = 1; i <= 200; ++i) {
      const double metric = 1e-3 + (edge - 1e-3) * i / 200.0;
      const double cur = nonrealizable_score(metric, 2.0, params);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
  SUBCASE("interior minimum in the trade-off regime") {
    // kappa >= 10, m=32, eta=0.1, c=1, t=1; grid spanning (0, 3 sqrt(mc/eta)].
    const BoundParams params{.eta = 0.1, .c = 1.0, .t = 1, .m = 32};
    const double hi = 3.0 * std::sqrt(params.m * params.c / params.eta);
    const int grid = 400;
    std::size_t argmin = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= grid; ++i) {
      const double metric = hi * i / grid;
      const double s = nonrealizable_score(metric, 10.0, params);
      if (s < best) {
        best = s;
        argmin = static_cast<std::size_t>(i);
      }
    }
    CHECK(argmin > 1);
    CHECK(argmin < static_cast<std::size_t>(grid));
  }
}

TEST_CASE("hybrid objective") {
  CHECK(hnas_objective(2.0, 4.0, {.mu = 0.0, .nu = 0.0, .t = 1}) == 2.0);
  CHECK(hnas_objective(2.0, 4.0, {.mu = 0.7, .nu = 4.0, .t = 1}) == 2.0);  // nu = M^2
  CHECK(hnas_objective(1.0, 2.0, {.mu = 0.1, .nu = 0.5, .t = 1}) ==
        doctest::Approx(2.025).epsilon(1e-15));
  CHECK_THROWS_AS(hnas_objective(0.0, 1.0, {}), ConfigError);
}

TEST_CASE("linearized residual") {
  SUBCASE("t = 0 is the identity") {
    Rng rng(71);
    const NtkSummary ntk = random_psd_system(rng, 4, 12);
    Eigen::VectorXd r0(4);
    r0 << 1, -2, 0.5, 3;
    CHECK((linearized_residual(ntk, r0, 0.5 * 4.0 / ntk.lambda_max, 0) - r0).norm() == 0.0);
  }
  SUBCASE("identity kernel contracts by a scalar factor") {
    NtkSummary ntk;
    ntk.matrix = Eigen::MatrixXd::Identity(2, 2);
    ntk.trace = 2.0;
    ntk.lambda_min = ntk.lambda_max = 1.0;
    ntk.kappa = 1.0;
    const Eigen::VectorXd r = linearized_residual(ntk, Eigen::VectorXd::Ones(2), 1.0, 2);
    CHECK(r(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(r(1) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("learning rate outside the regime is rejected") {
    NtkSummary ntk;
    ntk.matrix = Eigen::MatrixXd::Identity(2, 2);
    ntk.lambda_max = 1.0;
    CHECK_THROWS_AS(linearized_residual(ntk, Eigen::VectorXd::Ones(2), 2.5, 1), ConfigError);
  }
  SUBCASE("matches explicit gradient descent on a linear model") {
    Rng rng(92);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd g;
      const NtkSummary ntk = random_psd_system(rng, 5, 16, &g);
      Eigen::VectorXd y(5);
      for (int i = 0; i < 5; ++i) y(i) = rng.uniform();
      const double eta = 0.8 * 5.0 / ntk.lambda_max;
      const auto run = oracle::linear_gd(g, y, eta, 50);
      const Eigen::VectorXd closed = linearized_residual(ntk, run.residuals[0], eta, 50);
      CHECK((closed - run.residuals[50]).norm() <= 1e-8);
    }
  }
}

TEST_CASE("linearized loss bound") {
  SUBCASE("vanishes at the critical metric") {
    const double m = 8.0, eta = 0.5;
    CHECK(linearized_loss_bound(std::sqrt(m / eta), eta, 8, 3) == 0.0);
  }
  SUBCASE("direct substitution") {
    CHECK(linearized_loss_bound(1.0, 1.0, 2, 1) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("dominates the actual linearized loss in the concentrated regime") {
    // Valid where the spectrum concentrates (Gram of d >> m rows, cautious
    // learning rate); see the regime-limited subcase below.
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 5;
      const NtkSummary ntk = random_psd_system(rng, m, 4000);
      Eigen::VectorXd r0(m);
      for (int i = 0; i < m; ++i) r0(i) = rng.uniform(-1.0, 1.0);  // residual in [-1,1]^m
      const double eta = 0.1 * m / ntk.lambda_max;
      const double trace_metric = std::sqrt(ntk.trace / m);
      REQUIRE(eta * trace_metric * trace_metric / m < 2.0);
      Eigen::VectorXd r = r0;
      for (int t = 1; t <= 100; ++t) {
        r = linearized_residual(ntk, r, eta, 1);
        const double loss = r.squaredNorm() / (2.0 * m);
        CHECK(loss <= linearized_loss_bound(trace_metric, eta, m, t) + 1e-12);
      }
    }
  }
  SUBCASE("the mean-factor bound is regime-limited") {
    // With a spread spectrum and aggressive learning rate the slowest mode
    // outlives the mean decay factor and crosses the bound at moderate t.
    Rng rng(321);
    const int m = 5;
    const NtkSummary ntk = random_psd_system(rng, m, 6);
    const double eta = 0.9 * m / ntk.lambda_max;
    const double trace_metric = std::sqrt(ntk.trace / m);
    Eigen::VectorXd r = Eigen::VectorXd::Ones(m);
    bool crossed = false;
    for (int t = 1; t <= 100 && !crossed; ++t) {
      r = linearized_residual(ntk, r, eta, 1);
      crossed = r.squaredNorm() / (2.0 * m) > linearized_loss_bound(trace_metric, eta, m, t);
    }
    CHECK(crossed);
  }
}

TEST_CASE("parameter drift bound") {
  SUBCASE("identity kernel") {
    NtkSummary ntk;
    ntk.matrix = Eigen::MatrixXd::Identity(2, 2);
    CHECK(param_drift_bound(ntk, Eigen::VectorXd::Ones(2)) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("diagonal kernel") {
    NtkSummary ntk;
    ntk.matrix = Eigen::MatrixXd::Zero(2, 2);
    ntk.matrix(0, 0) = 4.0;
    ntk.matrix(1, 1) = 1.0;
    Eigen::VectorXd r(2);
    r << 2.0, 1.0;
    CHECK(param_drift_bound(ntk, r) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("singular kernel is rejected") {
    NtkSummary ntk;
    ntk.matrix = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(param_drift_bound(ntk, Eigen::VectorXd::Ones(2)), NumericError);
  }
  SUBCASE("drift of explicit gradient descent is monotone and bounded") {
    Rng rng(321);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd g;
      const int m = 4;
      const NtkSummary ntk = random_psd_system(rng, m, 20, &g);
      Eigen::VectorXd y(m);
      for (int i = 0; i < m; ++i) y(i) = rng.uniform();
      const double eta = 0.9 * m / ntk.lambda_max;
      const auto run = oracle::linear_gd(g, y, eta, 100);
      const double bound = param_drift_bound(ntk, run.residuals[0]);
      for (std::size_t t = 1; t < run.drifts.size(); ++t) {
        CHECK(run.drifts[t] >= run.drifts[t - 1] - 1e-12);
        CHECK(run.drifts[t] <= bound + 1e-8);
      }
    }
  }
}

TEST_CASE("score invariances") {
  // Scaling kappa by a common factor preserves the mu=0 objective argmin.
  Rng rng(777);
  std::vector<double> metrics, kappas;
  for (int i = 0; i < 40; ++i) {
    metrics.push_back(0.1 + 5.0 * rng.uniform());
    kappas.push_back(1.0 + 50.0 * rng.uniform());
  }
  const auto argmin_objective = [&](double scale) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < metrics.size(); ++i) {
      if (hnas_objective(metrics[i], scale * kappas[i], {.mu = 0.0}) <
          hnas_objective(metrics[best], scale * kappas[best], {.mu = 0.0}))
        best = i;
    }
    return best;
  };
  CHECK(argmin_objective(1.0) == argmin_objective(7.5));
  CHECK(argmin_objective(1.0) == argmin_objective(0.02));
}
