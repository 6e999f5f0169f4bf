#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ntklab {

/// Operation on one DAG-cell edge. The declaration order is the documented
/// lexical order used by enumeration and tie-breaking.
enum class EdgeOp : std::uint8_t { zero = 0, skip, linear, linear_relu, linear_tanh };

inline constexpr int kNumEdgeOps = 5;
inline constexpr int kNumCellNodes = 4;
inline constexpr int kNumCellEdges = 6;  // ordered (0,1) (0,2) (1,2) (0,3) (1,3) (2,3)

/// (source, target) node pair for edge index e.
std::pair<int, int> cell_edge(int e);

std::string_view to_string(EdgeOp op);
std::optional<EdgeOp> edge_op_from_string(std::string_view s);

/// One cell architecture: an op per DAG edge plus a stacked-cell count.
/// Canonical encoding: `|op(0->1)|op(0->2)|op(1->2)|op(0->3)|op(1->3)|op(2->3)|xC`.
struct CellArch {
  std::array<EdgeOp, kNumCellEdges> edge_ops{};
  int cells = 1;

  friend bool operator==(const CellArch&, const CellArch&) = default;
};

std::string encode(const CellArch& arch);

/// Parses a canonical encoding. Throws ParseError with the byte offset of the
/// first malformed character.
CellArch decode(std::string_view s);

/// Number of distinct cells: 5^6 = 15625 (per cell count).
std::size_t space_cardinality();

/// An ordered list of architectures with canonical IDs.
struct ArchPool {
  enum class Provenance { sampled, enumerated, file };

  std::vector<CellArch> entries;
  std::vector<std::string> ids;  // parallel to entries
  std::uint64_t seed = 0;
  Provenance provenance = Provenance::sampled;

  std::size_t size() const { return entries.size(); }
};

/// Uniform i.i.d. sampling over the one-cell space, duplicates dropped and
/// refilled until `size` unique entries. Throws ConfigError when size
/// exceeds the space cardinality or is zero.
ArchPool sample_pool(std::size_t size, std::uint64_t seed);

/// First `limit` architectures in lexical op order (edge (2,3) varies fastest).
ArchPool enumerate_pool(std::size_t limit);

/// Pool file: JSON array of encoding strings. Unknown op labels rejected.
ArchPool load_pool(const std::filesystem::path& path);
void save_pool(const ArchPool& pool, const std::filesystem::path& path);

}  // namespace ntklab
