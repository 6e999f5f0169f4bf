// ntklab command-line driver: training-free scoring, hybrid search, bound
// correlation experiments, transfer deviation, and topology verification.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ntklab/bench.hpp"
#include "ntklab/bounds.hpp"
#include "ntklab/correlation.hpp"
#include "ntklab/errors.hpp"
#include "ntklab/hnas.hpp"
#include "ntklab/metrics.hpp"
#include "ntklab/rng.hpp"
#include "ntklab/serialize.hpp"
#include "ntklab/topology.hpp"

namespace {

using namespace ntklab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitEvaluator = 4;

struct GlobalOpts {
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;

  std::uint64_t resolve_seed() const {
    if (seed_set) return seed;
    if (const char* env = std::getenv("NTKLAB_SEED")) {
      try {
        return std::stoull(env);
      } catch (...) {
        throw ConfigError("NTKLAB_SEED is not an integer");
      }
    }
    return 0;
  }
};

// Shared dataset flags: either a CSV file or a seeded teacher dataset.
struct DataOpts {
  std::string data_file;
  bool synth = false;
  int n0 = 8;
  int m_train = 64;
  int m_val = 32;
  int m_test = 32;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--data", data_file, "dataset CSV (x0,...,x{n0-1},y)");
    cmd->add_flag("--synth", synth, "use a seeded synthetic teacher dataset");
    cmd->add_option("--n0", n0, "input dimension for --synth")->capture_default_str();
    cmd->add_option("--train", m_train, "train split size")->capture_default_str();
    cmd->add_option("--val", m_val, "validation split size")->capture_default_str();
    cmd->add_option("--test", m_test, "test split size")->capture_default_str();
  }

  DataSplits resolve(std::uint64_t seed) const {
    if (synth != data_file.empty())
      throw ConfigError("exactly one of --data and --synth is required");
    if (synth)
      return make_dataset(DatasetKind::teacher, n0, m_train, m_val, m_test,
                          derive_seed(seed, "dataset"));
    return make_dataset(DatasetKind::file, 0, m_train, m_val, m_test, derive_seed(seed, "dataset"),
                        data_file);
  }
};

struct ScoreOpts {
  int width = 32;
  int batch = 32;
  std::string scheme = "lecun";

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--width", width, "hidden width n")->capture_default_str();
    cmd->add_option("--batch", batch, "metric batch size m")->capture_default_str();
    cmd->add_option("--scheme", scheme, "init scheme: lecun|xavier|he")
        ->capture_default_str()
        ->check(CLI::IsMember({"lecun", "xavier", "he"}));
  }

  ScoreConfig resolve(std::uint64_t seed, int jobs) const {
    return ScoreConfig{width, init_scheme_from_string(scheme), derive_seed(seed, "scoring"), jobs};
  }
};

Dataset metric_batch(const DataSplits& splits, int batch, std::uint64_t seed) {
  return take_batch(splits.train, batch, derive_seed(seed, "metric-batch"));
}

ConfigEcho base_echo(const std::string& command, std::uint64_t seed) {
  return {{"command", command}, {"seed", std::to_string(seed)}};
}

void echo_data(ConfigEcho& echo, const DataOpts& data, const Dataset& batch) {
  echo.emplace_back("dataset", batch.name);
  echo.emplace_back("batch", std::to_string(batch.size()));
  if (!data.synth) {
    echo.emplace_back("input_scale", std::to_string(batch.transform.input_scale));
    echo.emplace_back("label_lo", std::to_string(batch.transform.label_lo));
    echo.emplace_back("label_hi", std::to_string(batch.transform.label_hi));
  }
}

// ---- score ---------------------------------------------------------------

struct ScoreCmd {
  GlobalOpts* global = nullptr;
  std::string pool_file, out_file, format = "json", metric_only;
  DataOpts data;
  ScoreOpts score;

  void run() const {
    const std::uint64_t seed = global->resolve_seed();
    const ArchPool pool = load_pool(pool_file);
    const DataSplits splits = data.resolve(seed);
    const Dataset batch = metric_batch(splits, score.batch, seed);
    auto reports = score_pool(pool, batch, score.resolve(seed, global->jobs));

    bool all_failed = true;
    for (const auto& r : reports) all_failed = all_failed && r.failed;
    if (all_failed) throw NumericError("every architecture in the batch failed numerically");

    ConfigEcho echo = base_echo("score", seed);
    echo.emplace_back("pool", pool_file);
    echo.emplace_back("width", std::to_string(score.width));
    echo.emplace_back("scheme", score.scheme);
    echo_data(echo, data, batch);
    if (!metric_only.empty()) echo.emplace_back("metric_only", metric_only);

    std::string text;
    if (output_format_from_string(format) == OutputFormat::json) {
      if (metric_only.empty()) {
        text = metric_reports_jsonl(reports, echo);
      } else {
        const MetricChoice choice = metric_choice_from_string(metric_only);
        std::vector<MetricReport> slim = reports;
        for (auto& r : slim) {
          MetricReport keep;
          keep.arch_id = r.arch_id;
          keep.batch_size = r.batch_size;
          keep.seed = r.seed;
          keep.failed = r.failed;
          keep.failure = r.failure;
          keep.clamped = r.clamped;
          keep.kappa = r.kappa;
          switch (choice) {
            case MetricChoice::grad: keep.grad = r.grad; break;
            case MetricChoice::snip: keep.snip = r.snip; break;
            case MetricChoice::grasp: keep.grasp = r.grasp; break;
            case MetricChoice::trace: keep.trace_norm = r.trace_norm; break;
          }
          r = keep;
        }
        text = metric_reports_jsonl(slim, echo);
      }
    } else {
      text = metric_reports_csv(reports, echo);
    }
    atomic_write(out_file, text);
    std::cout << "wrote " << reports.size() << " reports to " << out_file << "\n";
  }
};

// ---- search ---------------------------------------------------------------

struct SearchCmd {
  GlobalOpts* global = nullptr;
  std::string pool_file, bench_file, out_file, metric = "trace";
  bool live = false;
  int budget = 20;
  int train_steps = 200;
  DataOpts data;
  ScoreOpts score;

  void run() const {
    const std::uint64_t seed = global->resolve_seed();
    if (live == !bench_file.empty())
      throw ConfigError("exactly one of --bench and --live is required");

    const ArchPool pool = load_pool(pool_file);
    const DataSplits splits = data.resolve(seed);
    const Dataset batch = metric_batch(splits, score.batch, seed);
    const auto reports = score_pool(pool, batch, score.resolve(seed, global->jobs));

    std::optional<TabularBench> bench;
    Evaluator evaluator;
    if (!live) {
      bench = load_bench(bench_file);
      evaluator = [&bench](const std::string& id) {
        const auto it = bench->entries.find(id);
        if (it == bench->entries.end())
          throw EvaluatorError("bench has no entry for " + id);
        if (it->second.flagged) return -1e300;  // divergent entry, never a winner
        return it->second.val_score;
      };
    } else {
      const TrainBenchConfig train_cfg{train_steps, score.width,
                                       init_scheme_from_string(score.scheme), 0.1, 1};
      evaluator = [&, train_cfg](const std::string& id) {
        const CellArch arch = decode(id);
        try {
          const ModelInstance model =
              init_params(arch, train_cfg.width, static_cast<int>(splits.train.dim()),
                          train_cfg.scheme, derive_seed(seed, id));
          const NtkSummary ntk = ntk_matrix(model, splits.train);
          const double m = static_cast<double>(splits.train.size());
          const double lr = ntk.lambda_max > 0.0
                                ? std::min(train_cfg.max_lr, 0.5 * m / ntk.lambda_max)
                                : train_cfg.max_lr;
          const TrainResult result = train_gd(model, splits.train, lr, train_cfg.steps);
          return -mean_mse(result.model, splits.val);
        } catch (const NumericError&) {
          return -1e300;  // divergence counts as a very bad candidate
        }
      };
    }

    HnasConfig cfg;
    cfg.metric = metric_choice_from_string(metric);
    cfg.budget = budget;
    cfg.seed = derive_seed(seed, "search");
    const SearchTrace trace = hnas_search(reports, evaluator, cfg);

    ConfigEcho echo = base_echo("search", seed);
    echo.emplace_back("pool", pool_file);
    echo.emplace_back("mode", live ? "live" : "tabular");
    if (!live) echo.emplace_back("bench", bench_file);
    echo.emplace_back("metric", metric);
    echo.emplace_back("budget", std::to_string(budget));
    echo.emplace_back("width", std::to_string(score.width));
    echo_data(echo, data, batch);

    atomic_write(out_file, search_trace_to_json(trace, echo));
    std::cout << "best " << trace.best_arch << " val " << trace.best_val << " evals "
              << trace.evals << "\n";
  }
};

// ---- correlate -------------------------------------------------------------

struct CorrelateCmd {
  GlobalOpts* global = nullptr;
  std::string pool_file, bench_file, out_file, scenario = "both";
  int budget = 16;
  DataOpts data;
  ScoreOpts score;

  void run() const {
    const std::uint64_t seed = global->resolve_seed();
    const ArchPool pool = load_pool(pool_file);
    const TabularBench bench = load_bench(bench_file);
    const DataSplits splits = data.resolve(seed);
    const Dataset batch = metric_batch(splits, score.batch, seed);
    const auto reports = score_pool(pool, batch, score.resolve(seed, global->jobs));

    ConfigEcho echo = base_echo("correlate", seed);
    echo.emplace_back("pool", pool_file);
    echo.emplace_back("bench", bench_file);
    echo.emplace_back("scenario", scenario);
    echo.emplace_back("budget", std::to_string(budget));
    echo_data(echo, data, batch);

    std::string text;
    if (scenario == "realizable" || scenario == "both") {
      const CorrelationReport rep = correlate(bench, reports, Scenario::realizable);
      text += correlation_report_csv(rep, echo);
      for (const auto& row : rep.rows)
        std::cout << "realizable " << row.metric << " spearman " << row.spearman << "\n";
    }
    if (scenario == "nonrealizable" || scenario == "both") {
      // One BO run per metric; each metric reports its own optimized row.
      CorrelationReport combined;
      combined.scenario = Scenario::nonrealizable;
      for (const MetricChoice m :
           {MetricChoice::grad, MetricChoice::snip, MetricChoice::grasp, MetricChoice::trace}) {
        const auto [params, rep] =
            optimize_bound_params(bench, reports, m, budget, derive_seed(seed, to_string(m)));
        combined.params = params;
        combined.n = rep.n;
        combined.rows.push_back(rep.row(m));
        echo.emplace_back(std::string("lambda_") + std::string(to_string(m)),
                          std::to_string(params.lambda()));
      }
      text += correlation_report_csv(combined, echo);
      for (const auto& row : combined.rows)
        std::cout << "nonrealizable " << row.metric << " spearman " << row.spearman << "\n";
    }
    if (text.empty()) throw ConfigError("unknown scenario '" + scenario + "'");
    atomic_write(out_file, text);
  }
};

// ---- transfer ---------------------------------------------------------------

struct TransferCmd {
  GlobalOpts* global = nullptr;
  std::string pool_file, bench_file, out_file, scenario = "realizable";
  std::vector<std::string> metric_files;
  std::vector<std::uint64_t> metric_seeds;
  double lambda = 0.0;
  DataOpts data;  // used only for --metric-seeds teacher generation sizes
  ScoreOpts score;

  void run() const {
    const std::uint64_t seed = global->resolve_seed();
    const ArchPool pool = load_pool(pool_file);
    const TabularBench bench = load_bench(bench_file);

    std::vector<std::vector<MetricReport>> report_sets;
    std::vector<std::string> names;
    for (const auto& file : metric_files) {
      const Dataset full = load_dataset_csv(file);
      const Dataset batch = take_batch(full, score.batch, derive_seed(seed, "metric-batch"));
      report_sets.push_back(score_pool(pool, batch, score.resolve(seed, global->jobs)));
      names.push_back(file);
    }
    for (const std::uint64_t ds : metric_seeds) {
      const DataSplits splits =
          make_dataset(DatasetKind::teacher, data.n0, data.m_train, data.m_val, data.m_test, ds);
      const Dataset batch = take_batch(splits.train, score.batch, derive_seed(seed, "metric-batch"));
      report_sets.push_back(score_pool(pool, batch, score.resolve(seed, global->jobs)));
      names.push_back("teacher-" + std::to_string(ds));
    }
    if (report_sets.size() < 2)
      throw ConfigError("need at least two metric datasets (--metric-data/--metric-seeds)");

    Scenario sc;
    BoundParams params;
    if (scenario == "realizable") {
      sc = Scenario::realizable;
    } else if (scenario == "nonrealizable") {
      sc = Scenario::nonrealizable;
      if (lambda <= 0.0) throw ConfigError("--lambda > 0 is required for the non-realizable scenario");
      params.c = 1.0;
      params.t = 1;
      params.m = score.batch;
      params.eta = lambda * score.batch;
    } else {
      throw ConfigError("unknown scenario '" + scenario + "'");
    }

    const TransferReport rep = transfer_experiment(bench, report_sets, sc, params);

    ConfigEcho echo = base_echo("transfer", seed);
    echo.emplace_back("pool", pool_file);
    echo.emplace_back("bench", bench_file);
    echo.emplace_back("scenario", scenario);
    for (std::size_t i = 0; i < names.size(); ++i)
      echo.emplace_back("metric_dataset_" + std::to_string(i), names[i]);

    atomic_write(out_file, transfer_report_csv(rep, echo));
    for (const auto& row : rep.rows)
      std::cout << row.metric << " spearman " << row.spearman_mean << " +/- " << row.spearman_std
                << "\n";
  }
};

// ---- verify-topology --------------------------------------------------------

struct VerifyTopologyCmd {
  GlobalOpts* global = nullptr;
  std::string out_file;
  int trials = 2000;
  bool skip_deep = false;

  void run() const {
    const std::uint64_t seed = global->resolve_seed();
    bool ok = true;

    // Wide identity: NTK = L n I exactly, every seed.
    for (const auto& [n, L, m] : std::vector<std::array<int, 3>>{{4, 2, 3}, {8, 3, 4}}) {
      const Eigen::MatrixXd x = orthonormal_inputs(n, m, derive_seed(seed, "inputs"));
      const double target = static_cast<double>(L) * n;
      double worst = 0.0, worst_kappa = 0.0;
      for (std::uint64_t s = 0; s < 50; ++s) {
        const NtkSummary ntk = wide_ntk({n, L, m, derive_seed(seed, s)}, x);
        worst = std::max(
            (ntk.matrix - target * Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() / target,
            worst);
        worst_kappa = std::max(std::abs(ntk.kappa - 1.0), worst_kappa);
      }
      const bool pass = worst <= 1e-9 && worst_kappa <= 1e-9;
      ok = ok && pass;
      std::cout << (pass ? "PASS" : "FAIL") << " wide n=" << n << " L=" << L
                << " max |Theta - Ln I|/Ln = " << worst << ", max |kappa-1| = " << worst_kappa
                << "\n";
    }

    if (!skip_deep) {
      // Deep expectation: diagonal near L n^L, off-diagonal near 0.
      const int n = 4, L = 3, m = 3;
      const double target = 192.0;
      const Eigen::MatrixXd x = orthonormal_inputs(n, m, derive_seed(seed, "inputs"));
      const DeepExpectation est = deep_expectation({n, L, m, derive_seed(seed, "deep")}, x, trials);
      double diag_err = 0.0, offdiag = 0.0;
      for (int i = 0; i < m; ++i) {
        diag_err = std::max(diag_err, std::abs(est.mean(i, i) - target) / target);
        for (int j = 0; j < m; ++j)
          if (i != j) offdiag = std::max(offdiag, std::abs(est.mean(i, j)));
      }
      int high = 0;
      for (int t = 0; t < trials; ++t) {
        const NtkSummary ntk =
            deep_ntk({n, L, m, derive_seed(derive_seed(seed, "deep-kappa"),
                                           static_cast<std::uint64_t>(t))},
                     x);
        if (ntk.kappa > 1.5) ++high;
      }
      const double frac = static_cast<double>(high) / trials;
      const bool pass = diag_err <= 0.10 && offdiag <= 0.05 * target && frac > 0.9;
      ok = ok && pass;
      std::cout << (pass ? "PASS" : "FAIL") << " deep n=4 L=3 trials=" << trials
                << " diag err = " << diag_err << ", max |offdiag| = " << offdiag
                << ", kappa>1.5 fraction = " << frac << "\n";
    }

    if (!out_file.empty()) {
      const std::vector<TopologySpec> specs = {{4, 2, 3, derive_seed(seed, "report")},
                                               {8, 3, 4, derive_seed(seed, "report")},
                                               {4, 3, 3, derive_seed(seed, "report")}};
      ConfigEcho echo = base_echo("verify-topology", seed);
      echo.emplace_back("trials", std::to_string(std::min(trials, 500)));
      atomic_write(out_file, topology_report_csv(topology_report(specs, std::min(trials, 500)), echo));
    }
    if (!ok) throw NumericError("topology verification failed");
  }
};

// ---- bench build / bench synth ----------------------------------------------

struct BenchBuildCmd {
  GlobalOpts* global = nullptr;
  std::string pool_file, out_file;
  int steps = 200;
  DataOpts data;
  ScoreOpts score;

  void run() const {
    const std::uint64_t seed = global->resolve_seed();
    const ArchPool pool = load_pool(pool_file);
    const DataSplits splits = data.resolve(seed);
    TrainBenchConfig cfg;
    cfg.steps = steps;
    cfg.width = score.width;
    cfg.scheme = init_scheme_from_string(score.scheme);
    cfg.jobs = global->jobs;
    const TabularBench bench = build_bench(pool, splits, cfg, derive_seed(seed, "bench"));

    ConfigEcho echo = base_echo("bench build", seed);
    echo.emplace_back("pool", pool_file);
    echo.emplace_back("steps", std::to_string(steps));
    echo.emplace_back("width", std::to_string(score.width));
    echo.emplace_back("train", std::to_string(splits.train.size()));

    save_bench(bench, out_file, echo);
    std::cout << "wrote bench with " << bench.entries.size() << " entries to " << out_file << "\n";
  }
};

struct BenchSynthCmd {
  GlobalOpts* global = nullptr;
  std::string pool_file, out_file, metric = "trace";
  double mu_star = 0.01;
  double nu_star = 1.0;
  double noise = 0.0;
  DataOpts data;
  ScoreOpts score;

  void run() const {
    const std::uint64_t seed = global->resolve_seed();
    const ArchPool pool = load_pool(pool_file);
    const DataSplits splits = data.resolve(seed);
    const Dataset batch = metric_batch(splits, score.batch, seed);
    const TabularBench bench =
        synth_bench(pool, batch, score.resolve(seed, global->jobs), metric_choice_from_string(metric),
                    {mu_star, nu_star, 1}, noise, derive_seed(seed, "synth-bench"));

    ConfigEcho echo = base_echo("bench synth", seed);
    echo.emplace_back("pool", pool_file);
    echo.emplace_back("metric", metric);
    echo.emplace_back("mu_star", std::to_string(mu_star));
    echo.emplace_back("nu_star", std::to_string(nu_star));
    echo.emplace_back("noise", std::to_string(noise));
    echo_data(echo, data, batch);

    save_bench(bench, out_file, echo);
    std::cout << "wrote synthetic bench with " << bench.entries.size() << " entries to "
              << out_file << "\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"training-free NAS laboratory: NTK metrics, bound scores, hybrid search"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts global;
  app.add_option("--seed", global.seed, "global seed (fallback: NTKLAB_SEED, then 0)")
      ->each([&global](const std::string&) { global.seed_set = true; });
  app.add_option("--jobs", global.jobs, "max concurrent architecture evaluations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  ScoreCmd score_cmd;
  score_cmd.global = &global;
  auto* score = app.add_subcommand("score", "score a pool with the training-free metrics");
  score->add_option("--pool", score_cmd.pool_file, "pool JSON file")->required();
  score->add_option("--out", score_cmd.out_file, "output file")->required();
  score->add_option("--format", score_cmd.format, "json (JSONL) or csv")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "csv"}));
  score->add_option("--metric-only", score_cmd.metric_only, "emit a single metric column")
      ->check(CLI::IsMember({"grad", "snip", "grasp", "trace"}));
  score_cmd.data.add_flags(score);
  score_cmd.score.add_flags(score);
  score->callback([&score_cmd] { score_cmd.run(); });

  SearchCmd search_cmd;
  search_cmd.global = &global;
  auto* search = app.add_subcommand("search", "hybrid search with BO over (mu, nu)");
  search->add_option("--pool", search_cmd.pool_file, "pool JSON file")->required();
  search->add_option("--bench", search_cmd.bench_file, "tabular bench JSON");
  search->add_flag("--live", search_cmd.live, "train candidates instead of a bench lookup");
  search->add_option("--metric", search_cmd.metric, "grad|snip|grasp|trace")
      ->capture_default_str()
      ->check(CLI::IsMember({"grad", "snip", "grasp", "trace"}));
  search->add_option("--budget", search_cmd.budget, "BO iterations K")->capture_default_str();
  search->add_option("--steps", search_cmd.train_steps, "GD steps in --live mode")
      ->capture_default_str();
  search->add_option("--out", search_cmd.out_file, "trace JSON output")->required();
  search_cmd.data.add_flags(search);
  search_cmd.score.add_flags(search);
  search->callback([&search_cmd] { search_cmd.run(); });

  CorrelateCmd correlate_cmd;
  correlate_cmd.global = &global;
  auto* correlate = app.add_subcommand("correlate", "bound-score vs test-error correlations");
  correlate->add_option("--pool", correlate_cmd.pool_file, "pool JSON file")->required();
  correlate->add_option("--bench", correlate_cmd.bench_file, "bench JSON file")->required();
  correlate->add_option("--out", correlate_cmd.out_file, "CSV output")->required();
  correlate->add_option("--scenario", correlate_cmd.scenario, "realizable|nonrealizable|both")
      ->capture_default_str()
      ->check(CLI::IsMember({"realizable", "nonrealizable", "both"}));
  correlate->add_option("--budget", correlate_cmd.budget, "BO budget for bound parameters")
      ->capture_default_str();
  correlate_cmd.data.add_flags(correlate);
  correlate_cmd.score.add_flags(correlate);
  correlate->callback([&correlate_cmd] { correlate_cmd.run(); });

  TransferCmd transfer_cmd;
  transfer_cmd.global = &global;
  auto* transfer = app.add_subcommand("transfer", "correlation deviation across metric datasets");
  transfer->add_option("--pool", transfer_cmd.pool_file, "pool JSON file")->required();
  transfer->add_option("--bench", transfer_cmd.bench_file, "bench JSON file")->required();
  transfer->add_option("--out", transfer_cmd.out_file, "CSV output")->required();
  transfer->add_option("--metric-data", transfer_cmd.metric_files,
                       "metric dataset CSV (repeatable)");
  transfer->add_option("--metric-seeds", transfer_cmd.metric_seeds,
                       "teacher dataset seeds (repeatable)");
  transfer->add_option("--scenario", transfer_cmd.scenario, "realizable|nonrealizable")
      ->capture_default_str()
      ->check(CLI::IsMember({"realizable", "nonrealizable"}));
  transfer->add_option("--lambda", transfer_cmd.lambda,
                       "eta/(mc) for the non-realizable scenario");
  transfer_cmd.data.add_flags(transfer);
  transfer_cmd.score.add_flags(transfer);
  transfer->callback([&transfer_cmd] { transfer_cmd.run(); });

  VerifyTopologyCmd topo_cmd;
  topo_cmd.global = &global;
  auto* topo = app.add_subcommand("verify-topology", "check the wide/deep NTK identities");
  topo->add_option("--trials", topo_cmd.trials, "Monte Carlo trials for the deep check")
      ->capture_default_str();
  topo->add_flag("--skip-deep", topo_cmd.skip_deep, "only run the exact wide checks");
  topo->add_option("--out", topo_cmd.out_file, "optional topology report CSV");
  topo->callback([&topo_cmd] { topo_cmd.run(); });

  auto* bench = app.add_subcommand("bench", "tabular benchmark construction");
  bench->require_subcommand(1);

  BenchBuildCmd build_cmd;
  build_cmd.global = &global;
  auto* build = bench->add_subcommand("build", "train the pool into a tabular bench");
  build->add_option("--pool", build_cmd.pool_file, "pool JSON file")->required();
  build->add_option("--out", build_cmd.out_file, "bench JSON output")->required();
  build->add_option("--steps", build_cmd.steps, "GD steps per architecture")
      ->capture_default_str();
  build_cmd.data.add_flags(build);
  build_cmd.score.add_flags(build);
  build->callback([&build_cmd] { build_cmd.run(); });

  BenchSynthCmd synth_cmd;
  synth_cmd.global = &global;
  auto* synth = bench->add_subcommand("synth", "planted-optimum synthetic bench");
  synth->add_option("--pool", synth_cmd.pool_file, "pool JSON file")->required();
  synth->add_option("--out", synth_cmd.out_file, "bench JSON output")->required();
  synth->add_option("--metric", synth_cmd.metric, "grad|snip|grasp|trace")
      ->capture_default_str()
      ->check(CLI::IsMember({"grad", "snip", "grasp", "trace"}));
  synth->add_option("--mu-star", synth_cmd.mu_star, "hidden mu")->capture_default_str();
  synth->add_option("--nu-star", synth_cmd.nu_star, "hidden nu")->capture_default_str();
  synth->add_option("--noise", synth_cmd.noise, "Gaussian noise sigma")->capture_default_str();
  synth_cmd.data.add_flags(synth);
  synth_cmd.score.add_flags(synth);
  synth->callback([&synth_cmd] { synth_cmd.run(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const SearchAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const EvaluatorError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
