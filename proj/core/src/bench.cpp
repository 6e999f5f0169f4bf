#include "ntklab/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "ntklab/correlation.hpp"
#include "ntklab/errors.hpp"
#include "ntklab/gp.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace {

constexpr int kTeacherHidden = 16;

Eigen::VectorXd unit_ball_point(Rng& rng, int n0) {
  Eigen::VectorXd x(n0);
  for (int j = 0; j < n0; ++j) x(j) = rng.normal();
  const double norm = x.norm();
  if (norm == 0.0) return Eigen::VectorXd::Zero(n0);
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(n0));
  return x * (radius / norm);
}

// Fixed random two-layer tanh teacher; reproducible from (seed, n0) alone.
struct Teacher {
  Eigen::MatrixXd b;  // hidden x n0
  Eigen::VectorXd a;  // hidden

  Teacher(std::uint64_t seed, int n0) {
    Rng rng(derive_seed(seed, "teacher-weights"));
    b.resize(kTeacherHidden, n0);
    for (int i = 0; i < kTeacherHidden; ++i)
      for (int j = 0; j < n0; ++j) b(i, j) = rng.normal();
    a.resize(kTeacherHidden);
    for (int i = 0; i < kTeacherHidden; ++i)
      a(i) = rng.normal() / std::sqrt(static_cast<double>(kTeacherHidden));
  }

  double operator()(const Eigen::VectorXd& x) const {
    return a.dot((b * x).array().tanh().matrix());
  }
};

Dataset slice(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels, Eigen::Index lo,
              Eigen::Index count, const std::string& name) {
  Dataset d;
  d.inputs = inputs.middleRows(lo, count);
  d.labels = labels.segment(lo, count);
  d.name = name;
  return d;
}

}  // namespace

DataSplits make_dataset(DatasetKind kind, int n0, int m_train, int m_val, int m_test,
                        std::uint64_t seed, const std::filesystem::path& csv) {
  if (m_train < 1 || m_val < 1 || m_test < 1) throw ConfigError("split sizes must be >= 1");
  const Eigen::Index total = m_train + m_val + m_test;

  Eigen::MatrixXd inputs;
  Eigen::VectorXd labels;

  if (kind == DatasetKind::teacher) {
    if (n0 < 1) throw ConfigError("n0 must be >= 1");
    inputs.resize(total, n0);
    labels.resize(total);
    Rng rng(derive_seed(seed, "teacher-data"));
    const Teacher teacher(seed, n0);
    for (Eigen::Index i = 0; i < total; ++i) {
      const Eigen::VectorXd x = unit_ball_point(rng, n0);
      inputs.row(i) = x.transpose();
      labels(i) = teacher(x);
    }
    // Min-max label normalization with train-split statistics; val/test
    // clamped into [0,1].
    const double lo = labels.head(m_train).minCoeff();
    const double hi = labels.head(m_train).maxCoeff();
    if (hi > lo)
      labels = ((labels.array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0);
    else
      labels.setConstant(0.5);
  } else {
    const Dataset full = load_dataset_csv(csv);
    if (full.size() < total)
      throw ConfigError("dataset has " + std::to_string(full.size()) + " rows, need " +
                        std::to_string(total));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(full.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, "file-split"));
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      const std::size_t j = i + rng.uniform_int(idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    inputs.resize(total, full.dim());
    labels.resize(total);
    for (Eigen::Index i = 0; i < total; ++i) {
      inputs.row(i) = full.inputs.row(idx[static_cast<std::size_t>(i)]);
      labels(i) = full.labels(idx[static_cast<std::size_t>(i)]);
    }
  }

  const std::string base =
      kind == DatasetKind::teacher ? "teacher-" + std::to_string(seed) : csv.filename().string();
  DataSplits splits;
  splits.train = slice(inputs, labels, 0, m_train, base + "/train");
  splits.val = slice(inputs, labels, m_train, m_val, base + "/val");
  splits.test = slice(inputs, labels, m_train + m_val, m_test, base + "/test");
  return splits;
}

TabularBench build_bench(const ArchPool& pool, const DataSplits& splits,
                         const TrainBenchConfig& config, std::uint64_t seed) {
  if (pool.size() == 0) throw ConfigError("cannot build a bench from an empty pool");
  if (config.width < 1 || config.steps < 0) throw ConfigError("invalid training config");
  if (splits.train.size() < 1) throw ConfigError("empty training split");

  TabularBench bench;
  bench.mode = BenchMode::trained;
  bench.seed = seed;
  bench.dataset_fingerprint = dataset_fingerprint(splits.train);

  std::vector<std::pair<std::string, BenchEntry>> rows(pool.size());
  const double m = static_cast<double>(splits.train.size());

  const auto train_one = [&](std::size_t i) {
    const std::string& id = pool.ids[i];
    BenchEntry entry;
    entry.train_steps = config.steps;
    try {
      const ModelInstance model =
          init_params(pool.entries[i], config.width, static_cast<int>(splits.train.dim()),
                      config.scheme, derive_seed(seed, id));
      const NtkSummary ntk = ntk_matrix(model, splits.train);
      // Keep gradient descent inside the linearized-regime learning rates.
      const double lr = ntk.lambda_max > 0.0
                            ? std::min(config.max_lr, 0.5 * m / ntk.lambda_max)
                            : config.max_lr;
      const TrainResult result = train_gd(model, splits.train, lr, config.steps);
      entry.val_score = -mean_mse(result.model, splits.val);
      entry.test_error = mean_mse(result.model, splits.test);
    } catch (const NumericError&) {
      entry = BenchEntry{};
      entry.train_steps = config.steps;
      entry.flagged = true;
    }
    rows[i] = {id, entry};
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1 || pool.size() == 1) {
    for (std::size_t i = 0; i < pool.size(); ++i) train_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int count = std::min<int>(jobs, static_cast<int>(pool.size()));
    for (int w = 0; w < count; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < pool.size(); i = next.fetch_add(1))
          train_one(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  for (auto& [id, entry] : rows) bench.entries.insert_or_assign(id, entry);
  return bench;
}

TabularBench synth_bench(const std::vector<MetricReport>& reports, MetricChoice metric,
                         const ObjectiveParams& hidden, double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  TabularBench bench;
  bench.mode = BenchMode::synthetic;
  bench.seed = seed;

  for (const auto& report : reports) {
    BenchEntry entry;
    const double m = metric_value(report, metric);
    if (report.failed || !(m > 0.0) || !std::isfinite(m)) {
      entry.flagged = true;
    } else {
      const double objective = hnas_objective(m, report.kappa, hidden);
      Rng rng(derive_seed(seed, report.arch_id));
      entry.val_score = -objective + noise_sigma * rng.normal();
      entry.test_error = objective + noise_sigma * rng.normal();
    }
    bench.entries.insert_or_assign(report.arch_id, entry);
  }
  return bench;
}

TabularBench synth_bench(const ArchPool& pool, const Dataset& data, const ScoreConfig& score,
                         MetricChoice metric, const ObjectiveParams& hidden, double noise_sigma,
                         std::uint64_t seed) {
  TabularBench bench = synth_bench(score_pool(pool, data, score), metric, hidden, noise_sigma, seed);
  bench.dataset_fingerprint = dataset_fingerprint(data);
  return bench;
}

std::string_view to_string(Scenario s) {
  return s == Scenario::realizable ? "realizable" : "nonrealizable";
}

const CorrelationRow& CorrelationReport::row(MetricChoice metric) const {
  for (const auto& r : rows)
    if (r.metric == to_string(metric)) return r;
  throw ConfigError("correlation report is missing metric row");
}

const TransferRow& TransferReport::row(MetricChoice metric) const {
  for (const auto& r : rows)
    if (r.metric == to_string(metric)) return r;
  throw ConfigError("transfer report is missing metric row");
}

CorrelationReport correlate(const TabularBench& bench, const std::vector<MetricReport>& reports,
                            Scenario scenario, const BoundParams& params) {
  CorrelationReport out;
  out.scenario = scenario;
  out.params = params;

  for (const MetricChoice metric :
       {MetricChoice::grad, MetricChoice::snip, MetricChoice::grasp, MetricChoice::trace}) {
    std::vector<double> scores, errors;
    for (const auto& report : reports) {
      if (report.failed) continue;
      const double m = metric_value(report, metric);
      if (!(m > 0.0) || !std::isfinite(m)) continue;
      const auto it = bench.entries.find(report.arch_id);
      if (it == bench.entries.end() || it->second.flagged) continue;
      scores.push_back(scenario == Scenario::realizable
                           ? realizable_score(m)
                           : nonrealizable_score(m, report.kappa, params));
      errors.push_back(it->second.test_error);
    }
    if (scores.size() < 3)
      throw ConfigError("bench/report intersection for metric " +
                        std::string(to_string(metric)) + " has fewer than 3 architectures");
    CorrelationRow row;
    row.metric = to_string(metric);
    row.spearman = spearman(scores, errors);
    row.kendall = kendall(scores, errors);
    row.pearson = pearson(scores, errors);
    out.rows.push_back(std::move(row));
    out.n = static_cast<int>(scores.size());
  }
  return out;
}

std::pair<BoundParams, CorrelationReport> optimize_bound_params(
    const TabularBench& bench, const std::vector<MetricReport>& reports, MetricChoice target,
    int budget, std::uint64_t seed) {
  if (budget < 1) throw ConfigError("BO budget must be >= 1");

  // Batch size of the metric evaluation (the m in the bound).
  int m = 0;
  for (const auto& r : reports)
    if (!r.failed) m = std::max(m, r.batch_size);
  if (m == 0) throw ConfigError("no usable reports");

  const auto lambda_to_params = [m](double lambda) {
    BoundParams p;
    p.c = 1.0;
    p.m = m;
    p.t = 1;
    p.eta = lambda * static_cast<double>(m);
    return p;
  };

  const auto objective = [&](double log_lambda) {
    const BoundParams p = lambda_to_params(std::pow(10.0, log_lambda));
    return correlate(bench, reports, Scenario::nonrealizable, p).row(target).spearman;
  };

  constexpr double kLo = -8.0, kHi = 2.0;
  const int n_init = std::min(5, budget);
  Rng design_rng(derive_seed(seed, "bound-design"));

  Eigen::MatrixXd points(budget, 1);
  Eigen::VectorXd values(budget);
  double best_u = 0.0, best_val = -2.0;

  for (int k = 0; k < budget; ++k) {
    double u;
    if (k < n_init) {
      u = design_rng.uniform();
    } else {
      const GpState gp = gp_fit(points.topRows(k), values.head(k));
      Rng cand_rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
      double best_ei = -1.0;
      u = 0.5;
      for (int c = 0; c < 2048; ++c) {
        Eigen::VectorXd q(1);
        q(0) = cand_rng.uniform();
        const double ei = expected_improvement(gp, q, values.head(k).maxCoeff());
        if (ei > best_ei) {
          best_ei = ei;
          u = q(0);
        }
      }
    }
    const double val = objective(kLo + u * (kHi - kLo));
    points(k, 0) = u;
    values(k) = val;
    if (val > best_val) {
      best_val = val;
      best_u = u;
    }
  }

  const BoundParams best = lambda_to_params(std::pow(10.0, kLo + best_u * (kHi - kLo)));
  return {best, correlate(bench, reports, Scenario::nonrealizable, best)};
}

TransferReport transfer_experiment(const TabularBench& bench,
                                   const std::vector<std::vector<MetricReport>>& report_sets,
                                   Scenario scenario, const BoundParams& params) {
  if (report_sets.size() < 2)
    throw ConfigError("transfer experiment needs at least two metric datasets");

  TransferReport out;
  out.scenario = scenario;
  out.n_datasets = static_cast<int>(report_sets.size());
  for (const auto& reports : report_sets)
    out.per_dataset.push_back(correlate(bench, reports, scenario, params));

  const double n = static_cast<double>(report_sets.size());
  for (const MetricChoice metric :
       {MetricChoice::grad, MetricChoice::snip, MetricChoice::grasp, MetricChoice::trace}) {
    TransferRow row;
    row.metric = to_string(metric);
    const auto stats = [&](auto pick, double& mean, double& sd) {
      mean = 0.0;
      for (const auto& rep : out.per_dataset) mean += pick(rep.row(metric));
      mean /= n;
      double acc = 0.0;
      for (const auto& rep : out.per_dataset) {
        const double d = pick(rep.row(metric)) - mean;
        acc += d * d;
      }
      sd = std::sqrt(acc / n);
    };
    stats([](const CorrelationRow& r) { return r.spearman; }, row.spearman_mean, row.spearman_std);
    stats([](const CorrelationRow& r) { return r.kendall; }, row.kendall_mean, row.kendall_std);
    stats([](const CorrelationRow& r) { return r.pearson; }, row.pearson_mean, row.pearson_std);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace ntklab
