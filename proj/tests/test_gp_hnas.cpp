#include <Eigen/LU>
#include <cmath>
#include <set>
#include <unordered_map>

#include "doctest.h"
#include "ntklab/bench.hpp"
#include "ntklab/errors.hpp"
#include "ntklab/gp.hpp"
#include "ntklab/hnas.hpp"
#include "ntklab/rng.hpp"

using namespace ntklab;

namespace {

Eigen::Vector2d pt(double a, double b) { return Eigen::Vector2d(a, b); }

// Fabricated pool of reports with controlled metric/kappa values.
std::vector<MetricReport> fake_reports(int count, std::uint64_t seed) {
  Rng rng(seed);
  const ArchPool pool = sample_pool(static_cast<std::size_t>(count), seed);
  std::vector<MetricReport> reports(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto& r = reports[static_cast<std::size_t>(i)];
    r.arch_id = pool.ids[static_cast<std::size_t>(i)];
    r.trace_norm = 0.5 + 4.5 * rng.uniform();
    r.grad = 0.4 * r.trace_norm * (0.8 + 0.4 * rng.uniform());
    r.snip = 1.5 * r.trace_norm * (0.8 + 0.4 * rng.uniform());
    r.grasp = 0.9 * r.trace_norm * (0.7 + 0.6 * rng.uniform());
    r.kappa = 1.0 + 30.0 * rng.uniform();
    r.batch_size = 32;
    r.seed = seed;
  }
  return reports;
}

}  // namespace

TEST_CASE("gp_fit basics") {
  SUBCASE("single point reproduces its target") {
    Eigen::MatrixXd x(1, 2);
    x << 0.4, 0.6;
    Eigen::VectorXd y(1);
    y << 3.7;
    const GpState gp = gp_fit(x, y);
    const GpPosterior post = gp_posterior(gp, pt(0.4, 0.6));
    CHECK(std::abs(post.mean - 3.7) < 1e-6);
  }
  SUBCASE("duplicated point with equal targets fits via jitter") {
    Eigen::MatrixXd x(2, 2);
    x << 0.5, 0.5, 0.5, 0.5;
    Eigen::VectorXd y(2);
    y << 1.0, 1.0;
    const GpState gp = gp_fit(x, y);
    CHECK(gp.size() == 2);
    CHECK(std::isfinite(gp.log_marginal));
  }
  SUBCASE("two-point posterior matches the direct 2x2 solve") {
    Eigen::MatrixXd x(2, 2);
    x << 0.2, 0.3, 0.7, 0.6;
    Eigen::VectorXd y(2);
    y << 0.4, 1.9;
    const GpState gp = gp_fit(x, y);
    const Eigen::Vector2d q(0.45, 0.5);

    // Direct computation with the fitted hyperparameters.
    const auto k = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
      return gp.signal_var *
             std::exp(-(a - b).squaredNorm() / (2.0 * gp.lengthscale * gp.lengthscale));
    };
    const Eigen::Vector2d a = x.row(0), b = x.row(1);
    Eigen::Matrix2d kk;
    kk << k(a, a) + gp.noise_var + gp.jitter, k(a, b), k(a, b),
        k(b, b) + gp.noise_var + gp.jitter;
    Eigen::Vector2d ks(k(q, a), k(q, b));
    const Eigen::Vector2d ys = gp.train_targets;
    const Eigen::Vector2d alpha = kk.inverse() * ys;
    const double mean = ks.dot(alpha) * gp.target_scale + gp.target_mean;
    const double var = gp.signal_var - ks.dot(kk.inverse() * ks);

    const GpPosterior post = gp_posterior(gp, q);
    CHECK(std::abs(post.mean - mean) < 1e-8);
    CHECK(std::abs(post.variance - var) < 1e-8);
  }
  SUBCASE("cholesky factor reconstructs the kernel-plus-noise matrix") {
    Eigen::MatrixXd x(5, 2);
    Eigen::VectorXd y(5);
    Rng rng(99);
    for (int i = 0; i < 5; ++i) {
      x(i, 0) = rng.uniform();
      x(i, 1) = rng.uniform();
      y(i) = rng.normal();
    }
    const GpState gp = gp_fit(x, y);
    Eigen::MatrixXd k(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        k(i, j) = gp.signal_var * std::exp(-(x.row(i) - x.row(j)).squaredNorm() /
                                           (2.0 * gp.lengthscale * gp.lengthscale));
    k.diagonal().array() += gp.noise_var + gp.jitter;
    CHECK((gp.chol * gp.chol.transpose() - k).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("chosen lengthscale maximizes the grid log marginal likelihood") {
    Eigen::MatrixXd x(6, 2);
    Eigen::VectorXd y(6);
    Rng rng(12);
    for (int i = 0; i < 6; ++i) {
      x(i, 0) = rng.uniform();
      x(i, 1) = rng.uniform();
      y(i) = std::sin(6.0 * x(i, 0)) + 0.5 * x(i, 1);
    }
    const GpState gp = gp_fit(x, y);
    double chosen_lml = 0.0;
    for (const auto& [ls, lml] : gp.grid_log_marginals)
      if (ls == gp.lengthscale) chosen_lml = lml;
    for (const auto& [ls, lml] : gp.grid_log_marginals) CHECK(chosen_lml >= lml);
  }
}

TEST_CASE("gp_posterior limits") {
  SUBCASE("training point in the noiseless limit") {
    Eigen::MatrixXd x(3, 2);
    x << 0.1, 0.1, 0.5, 0.9, 0.9, 0.2;
    Eigen::VectorXd y(3);
    y << 1.0, -2.0, 0.5;
    const GpState gp = gp_fit(x, y);
    for (int i = 0; i < 3; ++i) {
      const GpPosterior post = gp_posterior(gp, x.row(i).transpose());
      CHECK(std::abs(post.mean - y(i)) < 1e-2 * 3.0);
      CHECK(post.variance <= gp.noise_var + gp.jitter + 1e-6);
    }
  }
  SUBCASE("far from the data the prior takes over") {
    // Tight cluster with alternating targets forces a small lengthscale.
    Eigen::MatrixXd x(6, 2);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) {
      x(i, 0) = 0.05 + 0.02 * i;
      x(i, 1) = 0.05;
      y(i) = (i % 2 == 0) ? 1.0 : -1.0;
    }
    const GpState gp = gp_fit(x, y);
    REQUIRE(gp.lengthscale <= 0.1);
    const GpPosterior post = gp_posterior(gp, pt(0.95, 0.95));
    CHECK(std::abs(post.mean - gp.target_mean) < 1e-3);
    CHECK(std::abs(post.variance - gp.signal_var) < 1e-3);
  }
  SUBCASE("symmetric pair with equal targets reproduces the target") {
    Eigen::MatrixXd x(2, 2);
    x << 0.3, 0.5, 0.7, 0.5;
    Eigen::VectorXd y(2);
    y << 1.25, 1.25;
    const GpState gp = gp_fit(x, y);
    const GpPosterior post = gp_posterior(gp, pt(0.5, 0.5));
    CHECK(std::abs(post.mean - 1.25) < 1e-8);
  }
}

TEST_CASE("expected improvement") {
  Eigen::MatrixXd x(4, 2);
  x << 0.1, 0.2, 0.3, 0.8, 0.6, 0.4, 0.9, 0.9;
  Eigen::VectorXd y(4);
  y << 0.0, 1.0, -0.5, 2.0;
  const GpState gp = gp_fit(x, y);

  SUBCASE("vanishes at an already-observed point") {
    // Posterior deviation collapses to the noise level at a training point;
    // with the incumbent at that point's value EI is ~0.
    const double ei = expected_improvement(gp, pt(0.9, 0.9), 2.0 + 1e-6);
    CHECK(ei < 1e-2);
  }
  SUBCASE("phi(0) at a prior point whose mean equals the incumbent") {
    Eigen::MatrixXd xc(1, 2);
    xc << 0.0, 0.0;
    Eigen::VectorXd yc(1);
    yc << 5.0;
    GpState prior = gp_fit(xc, yc);
    prior.lengthscale = 0.05;  // keep the query effectively out of range
    const double ei = expected_improvement(prior, pt(1.0, 1.0), prior.target_mean);
    CHECK(ei == doctest::Approx(0.398942).epsilon(1e-3));
  }
  SUBCASE("nonnegative everywhere") {
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
      const double ei = expected_improvement(gp, pt(rng.uniform(), rng.uniform()), 2.0);
      CHECK(ei >= 0.0);
    }
  }
}

TEST_CASE("select_candidate") {
  SUBCASE("pool of one") {
    const auto reports = fake_reports(1, 5);
    CHECK(select_candidate(reports, MetricChoice::trace, {.mu = 0.3, .nu = 1.0}) ==
          reports[0].arch_id);
  }
  SUBCASE("mu = 0 reduces to the kappa/M argmin") {
    const auto reports = fake_reports(50, 6);
    std::size_t best = 0;
    for (std::size_t i = 1; i < reports.size(); ++i) {
      if (reports[i].kappa / reports[i].trace_norm <
          reports[best].kappa / reports[best].trace_norm)
        best = i;
    }
    CHECK(select_candidate(reports, MetricChoice::trace, {.mu = 0.0}) == reports[best].arch_id);
  }
  SUBCASE("matches brute force over random objective parameters") {
    const auto reports = fake_reports(100, 7);
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      ObjectiveParams params;
      params.mu = std::pow(10.0, rng.uniform(-6.0, 2.0));
      params.nu = rng.uniform(0.0, 25.0);
      std::string best;
      double best_obj = std::numeric_limits<double>::infinity();
      for (const auto& r : reports) {
        const double m = r.trace_norm;
        const double obj = r.kappa / m + params.mu * std::pow(m * m - params.nu, 2.0);
        if (obj < best_obj || (obj == best_obj && r.arch_id < best)) {
          best_obj = obj;
          best = r.arch_id;
        }
      }
      CHECK(select_candidate(reports, MetricChoice::trace, params) == best);
    }
  }
  SUBCASE("all-failed pool is an error") {
    auto reports = fake_reports(5, 9);
    for (auto& r : reports) r.failed = true;
    CHECK_THROWS_AS(select_candidate(reports, MetricChoice::trace, {}), EvaluatorError);
  }
}

TEST_CASE("hnas_search") {
  const auto reports = fake_reports(100, 21);
  const ObjectiveParams hidden{.mu = 0.01, .nu = 9.0, .t = 1};
  const TabularBench bench = synth_bench(reports, MetricChoice::trace, hidden, 0.0, 77);
  const Evaluator lookup = [&bench](const std::string& id) {
    return bench.entries.at(id).val_score;
  };

  SUBCASE("budget of one gives a one-step trace") {
    const SearchTrace trace = hnas_search(reports, lookup, {.budget = 1, .seed = 3});
    REQUIRE(trace.steps.size() == 1);
    CHECK(trace.best_arch == trace.steps[0].arch);
    CHECK(trace.evals == 1);
  }

  SUBCASE("identical architectures are evaluated once") {
    std::vector<MetricReport> same(6, reports[0]);
    int calls = 0;
    const Evaluator counting = [&](const std::string& id) {
      ++calls;
      return bench.entries.at(id).val_score;
    };
    const SearchTrace trace = hnas_search(same, counting, {.budget = 8, .seed = 1});
    CHECK(calls == 1);
    CHECK(trace.evals == 1);
    CHECK(trace.best_arch == reports[0].arch_id);
  }

  SUBCASE("memoization never exceeds the distinct selections") {
    int calls = 0;
    const Evaluator counting = [&](const std::string& id) {
      ++calls;
      return bench.entries.at(id).val_score;
    };
    const SearchTrace trace = hnas_search(reports, counting, {.budget = 15, .seed = 5});
    std::set<std::string> distinct;
    for (const auto& s : trace.steps) distinct.insert(s.arch);
    CHECK(calls == static_cast<int>(distinct.size()));
    CHECK(trace.evals == calls);
  }

  SUBCASE("trace is consistent and deterministic") {
    const SearchTrace a = hnas_search(reports, lookup, {.budget = 12, .seed = 9});
    const SearchTrace b = hnas_search(reports, lookup, {.budget = 12, .seed = 9});
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      CHECK(a.steps[i].mu == b.steps[i].mu);
      CHECK(a.steps[i].nu == b.steps[i].nu);
      CHECK(a.steps[i].arch == b.steps[i].arch);
      CHECK(a.steps[i].val == b.steps[i].val);
    }
    double best = -1e300;
    for (const auto& s : a.steps) best = std::max(best, s.val);
    CHECK(a.best_val == best);
  }

  SUBCASE("finds the planted optimum in at least 8 of 10 seeds") {
    std::string true_best;
    double best_val = -1e300;
    for (const auto& [id, e] : bench.entries) {
      if (!e.flagged && e.val_score > best_val) {
        best_val = e.val_score;
        true_best = id;
      }
    }
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const SearchTrace trace = hnas_search(reports, lookup, {.budget = 20, .seed = seed});
      if (trace.best_arch == true_best) ++hits;
    }
    CHECK(hits >= 8);
  }

  SUBCASE("evaluator failure aborts with the partial trace") {
    int calls = 0;
    const Evaluator flaky = [&](const std::string& id) {
      if (++calls > 3) throw std::runtime_error("backend down");
      return bench.entries.at(id).val_score;
    };
    try {
      hnas_search(reports, flaky, {.budget = 20, .seed = 2});
      FAIL("expected SearchAborted");
    } catch (const SearchAborted& e) {
      CHECK(e.partial_trace.steps.size() >= 3);
    }
  }
}

TEST_CASE("baselines") {
  const auto reports = fake_reports(60, 31);
  const TabularBench bench =
      synth_bench(reports, MetricChoice::trace, {.mu = 0.01, .nu = 4.0}, 0.0, 5);
  ArchPool pool;
  pool.provenance = ArchPool::Provenance::sampled;
  for (const auto& r : reports) {
    pool.entries.push_back(decode(r.arch_id));
    pool.ids.push_back(r.arch_id);
  }
  const Evaluator lookup = [&bench](const std::string& id) {
    return bench.entries.at(id).val_score;
  };

  SUBCASE("exhaustive random search finds the true optimum") {
    double best_val = -1e300;
    for (const auto& [id, e] : bench.entries) best_val = std::max(best_val, e.val_score);
    const SearchTrace trace = random_search(pool, lookup, static_cast<int>(pool.size()), 17);
    CHECK(trace.best_val == doctest::Approx(best_val));
  }

  SUBCASE("training-free argmax evaluates exactly once") {
    int calls = 0;
    const Evaluator counting = [&](const std::string& id) {
      ++calls;
      return bench.entries.at(id).val_score;
    };
    const SearchTrace trace = trainingfree_argmax(reports, MetricChoice::trace, counting);
    CHECK(calls == 1);
    CHECK(trace.evals == 1);
    REQUIRE(trace.steps.size() == 1);
    double max_metric = 0.0;
    for (const auto& r : reports) max_metric = std::max(max_metric, r.trace_norm);
    for (const auto& r : reports)
      if (r.arch_id == trace.steps[0].arch) CHECK(r.trace_norm == max_metric);
  }

  SUBCASE("hnas beats random search head-to-head at the median") {
    std::vector<double> hnas_best, rand_best;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      hnas_best.push_back(hnas_search(reports, lookup, {.budget = 20, .seed = seed}).best_val);
      rand_best.push_back(random_search(pool, lookup, 20, seed).best_val);
    }
    std::sort(hnas_best.begin(), hnas_best.end());
    std::sort(rand_best.begin(), rand_best.end());
    const double hnas_median = 0.5 * (hnas_best[4] + hnas_best[5]);
    const double rand_median = 0.5 * (rand_best[4] + rand_best[5]);
    CHECK(hnas_median >= rand_median);
  }
}
