#include <benchmark/benchmark.h>

#include "ntklab/bench.hpp"
#include "ntklab/gp.hpp"
#include "ntklab/hnas.hpp"
#include "ntklab/metrics.hpp"
#include "ntklab/rng.hpp"
#include "ntklab/topology.hpp"

using namespace ntklab;

namespace {

Dataset metric_fixture(int m, int n0) {
  const DataSplits splits = make_dataset(DatasetKind::teacher, n0, 128, 32, 32, 7);
  return take_batch(splits.train, m, 11);
}

void BM_OutputGradients(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const Dataset batch = metric_fixture(32, 8);
  const ModelInstance model =
      init_params(decode("|linear|skip|linear_relu|linear_tanh|skip|linear|x1"), width, 8,
                  InitScheme::lecun, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(output_gradients(model, batch));
  }
}
BENCHMARK(BM_OutputGradients)->Arg(16)->Arg(32)->Arg(64);

void BM_ScoreModel(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const Dataset batch = metric_fixture(32, 8);
  const ModelInstance model =
      init_params(decode("|linear|skip|linear_relu|linear_tanh|skip|linear|x1"), width, 8,
                  InitScheme::lecun, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_model(model, batch));
  }
}
BENCHMARK(BM_ScoreModel)->Arg(16)->Arg(32);

void BM_JacobiEigen(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Rng rng(5);
  Eigen::MatrixXd g(m, 4 * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < 4 * m; ++j) g(i, j) = rng.normal();
  const Eigen::MatrixXd gram = g * g.transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sym_eigen(gram));
  }
}
BENCHMARK(BM_JacobiEigen)->Arg(8)->Arg(32)->Arg(64);

void BM_GpFit(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  Rng rng(9);
  Eigen::MatrixXd x(k, 2);
  Eigen::VectorXd y(k);
  for (int i = 0; i < k; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = rng.uniform();
    y(i) = rng.normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(gp_fit(x, y));
  }
}
BENCHMARK(BM_GpFit)->Arg(5)->Arg(20)->Arg(50);

void BM_HnasSearch(benchmark::State& state) {
  const Dataset batch = metric_fixture(16, 8);
  const ArchPool pool = sample_pool(100, 13);
  const auto reports = score_pool(pool, batch, {.width = 8, .seed = 5});
  const TabularBench bench =
      synth_bench(reports, MetricChoice::trace, {.mu = 0.01, .nu = 1.0}, 0.01, 3);
  const Evaluator lookup = [&bench](const std::string& id) {
    const auto& e = bench.entries.at(id);
    return e.flagged ? -1e300 : e.val_score;
  };
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hnas_search(reports, lookup, {.budget = 20, .seed = seed++}));
  }
}
BENCHMARK(BM_HnasSearch);

void BM_DeepNtk(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = orthonormal_inputs(n, 3, 17);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(deep_ntk({n, 3, 3, seed++}, x));
  }
}
BENCHMARK(BM_DeepNtk)->Arg(4)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
