#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ntklab/bounds.hpp"
#include "ntklab/dataset.hpp"
#include "ntklab/errors.hpp"
#include "ntklab/metrics.hpp"
#include "ntklab/searchspace.hpp"

namespace ntklab {

struct SearchStep {
  int k = 0;
  double mu = 0.0;
  double nu = 0.0;
  std::string arch;
  double val = 0.0;
};

/// Ordered search iterations plus the incumbent. best_val is the maximum
/// validation score over the steps; the earliest step wins ties.
struct SearchTrace {
  std::vector<SearchStep> steps;
  std::string best_arch;
  double best_val = 0.0;
  int evals = 0;  // distinct evaluator calls (validation is memoized)
};

/// Maps an architecture ID to a validation score (higher is better).
using Evaluator = std::function<double(const std::string& arch_id)>;

/// Search failure carrying the iterations completed before the abort.
class SearchAborted : public EvaluatorError {
 public:
  SearchAborted(const std::string& what, SearchTrace partial)
      : EvaluatorError(what), partial_trace(std::move(partial)) {}
  SearchTrace partial_trace;
};

/// Argmin of the hybrid objective over the scored pool; ties broken by the
/// smallest canonical ID. Reports that failed numerically (or whose chosen
/// metric is not positive) are skipped; throws EvaluatorError when nothing
/// remains.
std::string select_candidate(const std::vector<MetricReport>& reports, MetricChoice metric,
                             const ObjectiveParams& params);

struct HnasConfig {
  MetricChoice metric = MetricChoice::trace;
  int budget = 20;
  std::uint64_t seed = 0;
  int init_design = 5;       // first min(init_design, budget) points are random
  int acq_candidates = 2048; // EI candidate grid size per step
  int t = 1;
};

/// One HNAS run over a pre-scored pool: Bayesian optimization over
/// (log10 mu, log10 nu) mapped to the unit square, expected improvement over
/// a seeded candidate grid, and memoized validation evaluations.
SearchTrace hnas_search(const std::vector<MetricReport>& reports, const Evaluator& evaluator,
                        const HnasConfig& config);

/// Scores the pool first (metrics and kappa computed once up front), then
/// runs the BO loop.
SearchTrace hnas_search(const ArchPool& pool, const Dataset& data, const ScoreConfig& score,
                        const Evaluator& evaluator, const HnasConfig& config);

/// Random search without replacement: evaluates a seeded shuffle prefix of
/// the pool (budget capped at the pool size).
SearchTrace random_search(const ArchPool& pool, const Evaluator& evaluator, int budget,
                          std::uint64_t seed);

/// Training-free baseline: evaluates only argmax of the chosen metric.
SearchTrace trainingfree_argmax(const std::vector<MetricReport>& reports, MetricChoice metric,
                                const Evaluator& evaluator);

}  // namespace ntklab
