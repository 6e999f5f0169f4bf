#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ntklab/bounds.hpp"
#include "ntklab/dataset.hpp"
#include "ntklab/hnas.hpp"
#include "ntklab/metrics.hpp"
#include "ntklab/searchspace.hpp"

namespace ntklab {

/// One trained (or synthesized) architecture outcome. Divergent training is
/// recorded with `flagged` set; flagged entries never carry usable scores.
struct BenchEntry {
  double val_score = 0.0;   // higher is better (negative validation MSE)
  double test_error = 0.0;  // lower is better (test MSE)
  int train_steps = 0;
  bool flagged = false;
};

enum class BenchMode { trained, synthetic };

/// Per-architecture trained performance, keyed by canonical architecture ID.
struct TabularBench {
  std::map<std::string, BenchEntry> entries;
  std::uint64_t dataset_fingerprint = 0;
  std::uint64_t seed = 0;
  BenchMode mode = BenchMode::trained;
};

enum class DatasetKind { teacher, file };

struct DataSplits {
  Dataset train, val, test;
};

/// Teacher mode: inputs uniform on the unit ball, labels from a fixed random
/// two-layer tanh teacher, min-max normalized to [0,1] with train-split
/// statistics (val/test clamped into range). File mode: loads the CSV and
/// splits it deterministically by a seeded shuffle.
DataSplits make_dataset(DatasetKind kind, int n0, int m_train, int m_val, int m_test,
                        std::uint64_t seed, const std::filesystem::path& csv = {});

struct TrainBenchConfig {
  int steps = 200;
  int width = 16;
  InitScheme scheme = InitScheme::lecun;
  double max_lr = 0.1;  // per-arch lr = min(max_lr, 0.5 m / lambda_max)
  int jobs = 1;
};

/// Trains every pool architecture with full-batch gradient descent;
/// val_score = -(validation MSE), test_error = test MSE. Per-arch seeds are
/// derived from `seed` and the canonical ID; divergent runs are flagged.
TabularBench build_bench(const ArchPool& pool, const DataSplits& splits,
                         const TrainBenchConfig& config, std::uint64_t seed);

/// Planted-optimum bench: val_score = -objective(M, kappa; hidden) + noise,
/// test_error = objective + independent noise. Architectures whose metric is
/// not positive are flagged.
TabularBench synth_bench(const std::vector<MetricReport>& reports, MetricChoice metric,
                         const ObjectiveParams& hidden, double noise_sigma, std::uint64_t seed);
TabularBench synth_bench(const ArchPool& pool, const Dataset& data, const ScoreConfig& score,
                         MetricChoice metric, const ObjectiveParams& hidden, double noise_sigma,
                         std::uint64_t seed);

enum class Scenario { realizable, nonrealizable };
std::string_view to_string(Scenario s);

/// Correlations between a bound score and the bench test errors, one row per
/// training-free metric.
struct CorrelationRow {
  std::string metric;
  double spearman = 0.0;
  double kendall = 0.0;
  double pearson = 0.0;
};

struct CorrelationReport {
  Scenario scenario = Scenario::realizable;
  BoundParams params;  // meaningful for the non-realizable scenario
  int n = 0;           // architectures in the intersection
  std::vector<CorrelationRow> rows;

  const CorrelationRow& row(MetricChoice metric) const;
};

/// Pairs the scenario's bound score with the bench test errors over the
/// arch-ID intersection (>= 3 required) and reports all four metrics.
CorrelationReport correlate(const TabularBench& bench, const std::vector<MetricReport>& reports,
                            Scenario scenario, const BoundParams& params = {});

/// 1-D Bayesian optimization of lambda = eta/(mc) on log10 lambda in [-8, 2]
/// (t = 1 fixed), maximizing the Spearman correlation between the
/// non-realizable score and the test errors for `target` metric.
std::pair<BoundParams, CorrelationReport> optimize_bound_params(
    const TabularBench& bench, const std::vector<MetricReport>& reports, MetricChoice target,
    int budget, std::uint64_t seed);

/// Correlation deviation across metric datasets (the bench stays fixed).
struct TransferRow {
  std::string metric;
  double spearman_mean = 0.0, spearman_std = 0.0;
  double kendall_mean = 0.0, kendall_std = 0.0;
  double pearson_mean = 0.0, pearson_std = 0.0;
};

struct TransferReport {
  Scenario scenario = Scenario::realizable;
  int n_datasets = 0;
  std::vector<TransferRow> rows;
  std::vector<CorrelationReport> per_dataset;

  const TransferRow& row(MetricChoice metric) const;
};

/// Correlates the fixed bench against metric reports recomputed on each of
/// the given datasets and reports the per-metric spread.
TransferReport transfer_experiment(const TabularBench& bench,
                                   const std::vector<std::vector<MetricReport>>& report_sets,
                                   Scenario scenario, const BoundParams& params = {});

}  // namespace ntklab
