#include "ntklab/searchspace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ntklab/errors.hpp"
#include "ntklab/rng.hpp"

namespace ntklab {

namespace {
constexpr std::array<std::pair<int, int>, kNumCellEdges> kEdges = {
    {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}}};

constexpr std::array<std::string_view, kNumEdgeOps> kOpNames = {
    "zero", "skip", "linear", "linear_relu", "linear_tanh"};
}  // namespace

std::pair<int, int> cell_edge(int e) { return kEdges.at(e); }

std::string_view to_string(EdgeOp op) { return kOpNames[static_cast<int>(op)]; }

std::optional<EdgeOp> edge_op_from_string(std::string_view s) {
  for (int i = 0; i < kNumEdgeOps; ++i) {
    if (kOpNames[i] == s) return static_cast<EdgeOp>(i);
  }
  return std::nullopt;
}

std::string encode(const CellArch& arch) {
  std::string out;
  for (const EdgeOp op : arch.edge_ops) {
    out += '|';
    out += to_string(op);
  }
  out += "|x";
  out += std::to_string(arch.cells);
  return out;
}

CellArch decode(std::string_view s) {
  CellArch arch;
  std::size_t pos = 0;
  for (int e = 0; e < kNumCellEdges; ++e) {
    if (pos >= s.size() || s[pos] != '|') throw ParseError("expected '|'", pos);
    ++pos;
    const std::size_t end = s.find('|', pos);
    if (end == std::string_view::npos) throw ParseError("unterminated op label", pos);
    const auto op = edge_op_from_string(s.substr(pos, end - pos));
    if (!op) throw ParseError("unknown op label '" + std::string(s.substr(pos, end - pos)) + "'", pos);
    arch.edge_ops[e] = *op;
    pos = end;
  }
  if (pos >= s.size() || s[pos] != '|') throw ParseError("expected '|x<cells>'", pos);
  ++pos;
  if (pos >= s.size() || s[pos] != 'x') throw ParseError("expected 'x<cells>'", pos);
  ++pos;
  int cells = 0;
  const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), cells);
  if (ec != std::errc() || cells < 1) throw ParseError("bad cell count", pos);
  const std::size_t tail = ptr - s.data();
  if (tail != s.size()) throw ParseError("trailing characters", tail);
  arch.cells = cells;
  return arch;
}

std::size_t space_cardinality() {
  std::size_t n = 1;
  for (int e = 0; e < kNumCellEdges; ++e) n *= kNumEdgeOps;
  return n;
}

namespace {

CellArch arch_from_index(std::size_t idx) {
  CellArch arch;
  // Edge (2,3) is the least significant digit.
  for (int e = kNumCellEdges - 1; e >= 0; --e) {
    arch.edge_ops[e] = static_cast<EdgeOp>(idx % kNumEdgeOps);
    idx /= kNumEdgeOps;
  }
  return arch;
}

void push(ArchPool& pool, CellArch arch) {
  pool.ids.push_back(encode(arch));
  pool.entries.push_back(std::move(arch));
}

}  // namespace

ArchPool sample_pool(std::size_t size, std::uint64_t seed) {
  if (size < 1) throw ConfigError("pool size must be >= 1");
  if (size > space_cardinality())
    throw ConfigError("requested pool size " + std::to_string(size) +
                      " exceeds space cardinality " + std::to_string(space_cardinality()));
  ArchPool pool;
  pool.seed = seed;
  pool.provenance = ArchPool::Provenance::sampled;
  Rng rng(seed);
  std::unordered_set<std::size_t> seen;
  while (pool.entries.size() < size) {
    const std::size_t idx = rng.uniform_int(space_cardinality());
    if (!seen.insert(idx).second) continue;
    push(pool, arch_from_index(idx));
  }
  return pool;
}

ArchPool enumerate_pool(std::size_t limit) {
  if (limit < 1) throw ConfigError("enumeration limit must be >= 1");
  limit = std::min(limit, space_cardinality());
  ArchPool pool;
  pool.provenance = ArchPool::Provenance::enumerated;
  for (std::size_t i = 0; i < limit; ++i) push(pool, arch_from_index(i));
  return pool;
}

ArchPool load_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pool file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("pool file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_array()) throw ConfigError("pool file must be a JSON array of encodings");
  ArchPool pool;
  pool.provenance = ArchPool::Provenance::file;
  for (const auto& item : j) {
    if (!item.is_string()) throw ConfigError("pool entries must be strings");
    push(pool, decode(item.get<std::string>()));
  }
  if (pool.entries.empty()) throw ConfigError("pool file is empty");
  return pool;
}

void save_pool(const ArchPool& pool, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& id : pool.ids) j.push_back(id);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write pool file: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ntklab
