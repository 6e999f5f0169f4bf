#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ntklab/bench.hpp"
#include "ntklab/hnas.hpp"
#include "ntklab/metrics.hpp"
#include "ntklab/topology.hpp"

namespace ntklab {

/// Report/file schema version. Readers reject a different major.
inline constexpr std::string_view kSchemaVersion = "1.0.0";

enum class OutputFormat { json, csv };
OutputFormat output_format_from_string(std::string_view s);

/// Writes `content` to a temp file next to `path` and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Key=value pairs echoed into every output header for reproducibility.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// MetricReports as JSON lines (header object first) or CSV with columns
/// arch_id,grad,snip,grasp,trace,kappa,clamped.
std::string metric_reports_jsonl(const std::vector<MetricReport>& reports,
                                 const ConfigEcho& config);
std::string metric_reports_csv(const std::vector<MetricReport>& reports,
                               const ConfigEcho& config);
std::vector<MetricReport> parse_metric_reports_jsonl(const std::string& text);

/// Bench file: {schema_version,mode,seed,dataset_fingerprint,entries:{...}}.
std::string bench_to_json(const TabularBench& bench, const ConfigEcho& config);
TabularBench parse_bench_json(const std::string& text);
void save_bench(const TabularBench& bench, const std::filesystem::path& path,
                const ConfigEcho& config = {});
TabularBench load_bench(const std::filesystem::path& path);

/// SearchTrace: {steps:[{k,mu,nu,arch,val}],best_arch,best_val,evals}.
std::string search_trace_to_json(const SearchTrace& trace, const ConfigEcho& config);
SearchTrace parse_search_trace_json(const std::string& text);

/// CorrelationReport CSV: scenario,metric,spearman,kendall,pearson,n.
std::string correlation_report_csv(const CorrelationReport& report, const ConfigEcho& config);

/// TransferReport CSV: per-metric mean/std of each coefficient.
std::string transfer_report_csv(const TransferReport& report, const ConfigEcho& config);

/// Topology CSV:
/// topology,n,L,m,trials,trace_metric_mean,trace_metric_std,kappa_mean,kappa_std.
std::string topology_report_csv(const std::vector<TopologyRow>& rows, const ConfigEcho& config);

}  // namespace ntklab
