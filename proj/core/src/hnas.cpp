#include "ntklab/hnas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "ntklab/gp.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace {

struct PoolEntry {
  const MetricReport* report;
  double metric;
};

std::vector<PoolEntry> usable_entries(const std::vector<MetricReport>& reports,
                                      MetricChoice metric) {
  std::vector<PoolEntry> out;
  for (const auto& r : reports) {
    if (r.failed) continue;
    const double m = metric_value(r, metric);
    if (!(m > 0.0) || !std::isfinite(m) || !std::isfinite(r.kappa)) continue;
    out.push_back({&r, m});
  }
  return out;
}

void finalize(SearchTrace& trace) {
  for (const auto& step : trace.steps) {
    if (trace.best_arch.empty() || step.val > trace.best_val) {
      trace.best_arch = step.arch;
      trace.best_val = step.val;
    }
  }
}

}  // namespace

std::string select_candidate(const std::vector<MetricReport>& reports, MetricChoice metric,
                             const ObjectiveParams& params) {
  const auto entries = usable_entries(reports, metric);
  if (entries.empty())
    throw EvaluatorError("no usable architectures: all reports failed or have non-positive metric");
  const PoolEntry* best = nullptr;
  double best_obj = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) {
    const double obj = hnas_objective(e.metric, e.report->kappa, params);
    if (best == nullptr || obj < best_obj ||
        (obj == best_obj && e.report->arch_id < best->report->arch_id)) {
      best = &e;
      best_obj = obj;
    }
  }
  return best->report->arch_id;
}

SearchTrace hnas_search(const std::vector<MetricReport>& reports, const Evaluator& evaluator,
                        const HnasConfig& config) {
  if (config.budget < 1) throw ConfigError("search budget must be >= 1");
  const auto entries = usable_entries(reports, config.metric);
  if (entries.empty())
    throw EvaluatorError("no usable architectures: all reports failed or have non-positive metric");

  // BO box: log10 mu in [-8, 4]; log10 nu spans [0.5 min M^2, 2 max M^2]
  // over the usable pool (nu competes with M^2 inside the objective, so an
  // absolute box would be scale-fragile).
  double min_m2 = std::numeric_limits<double>::infinity();
  double max_m2 = 0.0;
  for (const auto& e : entries) {
    min_m2 = std::min(min_m2, e.metric * e.metric);
    max_m2 = std::max(max_m2, e.metric * e.metric);
  }
  const double mu_lo = -8.0, mu_hi = 4.0;
  const double nu_lo = std::log10(0.5 * min_m2);
  const double nu_hi = std::log10(2.0 * max_m2);

  const auto to_params = [&](double u0, double u1) {
    ObjectiveParams p;
    p.mu = std::pow(10.0, mu_lo + u0 * (mu_hi - mu_lo));
    p.nu = std::pow(10.0, nu_lo + u1 * (nu_hi - nu_lo));
    p.t = config.t;
    return p;
  };

  SearchTrace trace;
  std::unordered_map<std::string, double> memo;
  const auto evaluate = [&](const std::string& arch) {
    const auto it = memo.find(arch);
    if (it != memo.end()) return it->second;
    double val;
    try {
      val = evaluator(arch);
    } catch (const SearchAborted&) {
      throw;
    } catch (const std::exception& e) {
      finalize(trace);
      throw SearchAborted(std::string("evaluator failed for ") + arch + ": " + e.what(), trace);
    }
    memo.emplace(arch, val);
    ++trace.evals;
    return val;
  };

  const int n_init = std::min(std::max(config.init_design, 1), config.budget);
  Rng design_rng(derive_seed(config.seed, "hnas-design"));

  Eigen::MatrixXd points(config.budget, 2);
  Eigen::VectorXd values(config.budget);

  for (int k = 0; k < config.budget; ++k) {
    double u0, u1;
    if (k < n_init) {
      u0 = design_rng.uniform();
      u1 = design_rng.uniform();
    } else {
      const GpState gp = gp_fit(points.topRows(k), values.head(k));
      double best_val = values.head(k).maxCoeff();
      Rng cand_rng(derive_seed(config.seed, static_cast<std::uint64_t>(k)));
      double best_ei = -1.0;
      u0 = u1 = 0.5;
      for (int c = 0; c < config.acq_candidates; ++c) {
        Eigen::Vector2d q(cand_rng.uniform(), cand_rng.uniform());
        const double ei = expected_improvement(gp, q, best_val);
        if (ei > best_ei) {
          best_ei = ei;
          u0 = q(0);
          u1 = q(1);
        }
      }
    }

    const ObjectiveParams params = to_params(u0, u1);
    const std::string arch = select_candidate(reports, config.metric, params);
    const double val = evaluate(arch);
    points(k, 0) = u0;
    points(k, 1) = u1;
    values(k) = val;
    trace.steps.push_back({k + 1, params.mu, params.nu, arch, val});
  }
  finalize(trace);
  return trace;
}

SearchTrace hnas_search(const ArchPool& pool, const Dataset& data, const ScoreConfig& score,
                        const Evaluator& evaluator, const HnasConfig& config) {
  return hnas_search(score_pool(pool, data, score), evaluator, config);
}

SearchTrace random_search(const ArchPool& pool, const Evaluator& evaluator, int budget,
                          std::uint64_t seed) {
  if (budget < 1) throw ConfigError("search budget must be >= 1");
  if (pool.size() == 0) throw ConfigError("cannot search an empty pool");

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "random-search"));
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const std::size_t j = i + rng.uniform_int(order.size() - i);
    std::swap(order[i], order[j]);
  }

  SearchTrace trace;
  std::unordered_map<std::string, double> memo;
  const int k_max = std::min<std::size_t>(static_cast<std::size_t>(budget), pool.size());
  for (int k = 0; k < k_max; ++k) {
    const std::string& arch = pool.ids[order[static_cast<std::size_t>(k)]];
    double val;
    const auto it = memo.find(arch);
    if (it != memo.end()) {
      val = it->second;
    } else {
      try {
        val = evaluator(arch);
      } catch (const std::exception& e) {
        finalize(trace);
        throw SearchAborted(std::string("evaluator failed for ") + arch + ": " + e.what(), trace);
      }
      memo.emplace(arch, val);
      ++trace.evals;
    }
    trace.steps.push_back({k + 1, 0.0, 0.0, arch, val});
  }
  finalize(trace);
  return trace;
}

SearchTrace trainingfree_argmax(const std::vector<MetricReport>& reports, MetricChoice metric,
                                const Evaluator& evaluator) {
  const auto entries = usable_entries(reports, metric);
  if (entries.empty())
    throw EvaluatorError("no usable architectures: all reports failed or have non-positive metric");
  const PoolEntry* best = nullptr;
  for (const auto& e : entries) {
    if (best == nullptr || e.metric > best->metric ||
        (e.metric == best->metric && e.report->arch_id < best->report->arch_id)) {
      best = &e;
    }
  }
  SearchTrace trace;
  double val;
  try {
    val = evaluator(best->report->arch_id);
  } catch (const std::exception& e) {
    throw SearchAborted(std::string("evaluator failed for ") + best->report->arch_id + ": " +
                            e.what(),
                        trace);
  }
  trace.evals = 1;
  trace.steps.push_back({1, 0.0, 0.0, best->report->arch_id, val});
  finalize(trace);
  return trace;
}

}  // namespace ntklab
