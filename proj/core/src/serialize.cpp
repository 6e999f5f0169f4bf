#include "ntklab/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ntklab/errors.hpp"

namespace ntklab {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  // Shortest round-trip representation, locale-independent.
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void check_schema(const json& j) {
  if (!j.contains("schema_version") || !j["schema_version"].is_string())
    throw ConfigError("file has no schema_version");
  const std::string v = j["schema_version"].get<std::string>();
  const std::string want(kSchemaVersion);
  const auto major = v.substr(0, v.find('.'));
  if (major != want.substr(0, want.find('.')))
    throw ConfigError("unsupported schema major version " + v + " (expected " + want + ")");
}

json config_to_json(const ConfigEcho& config) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : config) j[k] = v;
  return j;
}

std::string config_comment_lines(const ConfigEcho& config) {
  std::string out = "# schema_version=" + std::string(kSchemaVersion) + "\n";
  for (const auto& [k, v] : config) out += "# " + k + "=" + v + "\n";
  return out;
}

json report_to_json(const MetricReport& r) {
  json j;
  j["arch_id"] = r.arch_id;
  j["grad"] = r.grad;
  j["snip"] = r.snip;
  j["grasp"] = r.grasp;
  j["trace"] = r.trace_norm;
  j["kappa"] = r.kappa;
  j["clamped"] = r.clamped;
  j["batch"] = r.batch_size;
  j["seed"] = r.seed;
  j["failed"] = r.failed;
  if (r.failed) j["failure"] = r.failure;
  return j;
}

MetricReport report_from_json(const json& j) {
  MetricReport r;
  r.arch_id = j.at("arch_id").get<std::string>();
  r.grad = j.at("grad").get<double>();
  r.snip = j.at("snip").get<double>();
  r.grasp = j.at("grasp").get<double>();
  r.trace_norm = j.at("trace").get<double>();
  r.kappa = j.at("kappa").get<double>();
  r.clamped = j.at("clamped").get<bool>();
  r.batch_size = j.at("batch").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.failed = j.at("failed").get<bool>();
  if (j.contains("failure")) r.failure = j["failure"].get<std::string>();
  return r;
}

}  // namespace

OutputFormat output_format_from_string(std::string_view s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw ConfigError("unknown output format '" + std::string(s) + "'");
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::string metric_reports_jsonl(const std::vector<MetricReport>& reports,
                                 const ConfigEcho& config) {
  std::string out;
  json header;
  header["schema_version"] = kSchemaVersion;
  header["config"] = config_to_json(config);
  out += header.dump();
  out += '\n';
  for (const auto& r : reports) {
    out += report_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::string metric_reports_csv(const std::vector<MetricReport>& reports,
                               const ConfigEcho& config) {
  std::string out = config_comment_lines(config);
  out += "arch_id,grad,snip,grasp,trace,kappa,clamped\n";
  for (const auto& r : reports) {
    out += r.arch_id + ',' + format_double(r.grad) + ',' + format_double(r.snip) + ',' +
           format_double(r.grasp) + ',' + format_double(r.trace_norm) + ',' +
           format_double(r.kappa) + ',' + (r.clamped ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<MetricReport> parse_metric_reports_jsonl(const std::string& text) {
  std::vector<MetricReport> reports;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("bad JSONL line: " + std::string(e.what()));
    }
    if (first) {
      first = false;
      check_schema(j);
      continue;
    }
    reports.push_back(report_from_json(j));
  }
  if (first) throw ConfigError("metric report file is empty");
  return reports;
}

std::string bench_to_json(const TabularBench& bench, const ConfigEcho& config) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_to_json(config);
  j["mode"] = bench.mode == BenchMode::trained ? "trained" : "synthetic";
  j["seed"] = bench.seed;
  j["dataset_fingerprint"] = bench.dataset_fingerprint;
  ordered_json entries = ordered_json::object();
  for (const auto& [id, e] : bench.entries) {
    ordered_json row;
    row["val"] = e.val_score;
    row["test"] = e.test_error;
    row["steps"] = e.train_steps;
    row["flag"] = e.flagged;
    entries[id] = row;
  }
  j["entries"] = entries;
  return j.dump(2) + "\n";
}

TabularBench parse_bench_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("bench file is not valid JSON: " + std::string(e.what()));
  }
  check_schema(j);
  TabularBench bench;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "trained")
    bench.mode = BenchMode::trained;
  else if (mode == "synthetic")
    bench.mode = BenchMode::synthetic;
  else
    throw ConfigError("unknown bench mode '" + mode + "'");
  bench.seed = j.at("seed").get<std::uint64_t>();
  bench.dataset_fingerprint = j.at("dataset_fingerprint").get<std::uint64_t>();
  for (const auto& [id, row] : j.at("entries").items()) {
    decode(id);  // every key must be a valid architecture encoding
    BenchEntry e;
    e.val_score = row.at("val").get<double>();
    e.test_error = row.at("test").get<double>();
    e.train_steps = row.at("steps").get<int>();
    e.flagged = row.at("flag").get<bool>();
    bench.entries.insert_or_assign(id, e);
  }
  return bench;
}

void save_bench(const TabularBench& bench, const std::filesystem::path& path,
                const ConfigEcho& config) {
  atomic_write(path, bench_to_json(bench, config));
}

TabularBench load_bench(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open bench file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bench_json(buf.str());
}

std::string search_trace_to_json(const SearchTrace& trace, const ConfigEcho& config) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_to_json(config);
  ordered_json steps = ordered_json::array();
  for (const auto& s : trace.steps) {
    ordered_json step;
    step["k"] = s.k;
    step["mu"] = s.mu;
    step["nu"] = s.nu;
    step["arch"] = s.arch;
    step["val"] = s.val;
    steps.push_back(step);
  }
  j["steps"] = steps;
  j["best_arch"] = trace.best_arch;
  j["best_val"] = trace.best_val;
  j["evals"] = trace.evals;
  return j.dump(2) + "\n";
}

SearchTrace parse_search_trace_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("trace file is not valid JSON: " + std::string(e.what()));
  }
  check_schema(j);
  SearchTrace trace;
  for (const auto& step : j.at("steps")) {
    trace.steps.push_back({step.at("k").get<int>(), step.at("mu").get<double>(),
                           step.at("nu").get<double>(), step.at("arch").get<std::string>(),
                           step.at("val").get<double>()});
  }
  trace.best_arch = j.at("best_arch").get<std::string>();
  trace.best_val = j.at("best_val").get<double>();
  trace.evals = j.at("evals").get<int>();
  return trace;
}

std::string correlation_report_csv(const CorrelationReport& report, const ConfigEcho& config) {
  std::string out = config_comment_lines(config);
  out += "scenario,metric,spearman,kendall,pearson,n\n";
  for (const auto& row : report.rows) {
    out += std::string(to_string(report.scenario)) + ',' + row.metric + ',' +
           format_double(row.spearman) + ',' + format_double(row.kendall) + ',' +
           format_double(row.pearson) + ',' + std::to_string(report.n) + '\n';
  }
  return out;
}

std::string transfer_report_csv(const TransferReport& report, const ConfigEcho& config) {
  std::string out = config_comment_lines(config);
  out +=
      "scenario,metric,spearman_mean,spearman_std,kendall_mean,kendall_std,"
      "pearson_mean,pearson_std,n_datasets\n";
  for (const auto& row : report.rows) {
    out += std::string(to_string(report.scenario)) + ',' + row.metric + ',' +
           format_double(row.spearman_mean) + ',' + format_double(row.spearman_std) + ',' +
           format_double(row.kendall_mean) + ',' + format_double(row.kendall_std) + ',' +
           format_double(row.pearson_mean) + ',' + format_double(row.pearson_std) + ',' +
           std::to_string(report.n_datasets) + '\n';
  }
  return out;
}

std::string topology_report_csv(const std::vector<TopologyRow>& rows, const ConfigEcho& config) {
  std::string out = config_comment_lines(config);
  out += "topology,n,L,m,trials,trace_metric_mean,trace_metric_std,kappa_mean,kappa_std\n";
  for (const auto& r : rows) {
    out += r.topology + ',' + std::to_string(r.n) + ',' + std::to_string(r.L) + ',' +
           std::to_string(r.m) + ',' + std::to_string(r.trials) + ',' +
           format_double(r.trace_metric_mean) + ',' + format_double(r.trace_metric_std) + ',' +
           format_double(r.kappa_mean) + ',' + format_double(r.kappa_std) + '\n';
  }
  return out;
}

}  // namespace ntklab
