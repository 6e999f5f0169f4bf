#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ntklab/errors.hpp"
#include "ntklab/rng.hpp"
#include "ntklab/searchspace.hpp"

using namespace ntklab;

TEST_CASE("encoding round-trips") {
  SUBCASE("all-skip cell") {
    CellArch arch;
    arch.edge_ops.fill(EdgeOp::skip);
    CHECK(encode(arch) == "|skip|skip|skip|skip|skip|skip|x1");
    CHECK(decode(encode(arch)) == arch);
  }
  SUBCASE("all-zero cell") {
    CellArch arch;
    arch.edge_ops.fill(EdgeOp::zero);
    CHECK(decode(encode(arch)) == arch);
  }
  SUBCASE("100 random cells round-trip") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
      CellArch arch;
      for (auto& op : arch.edge_ops) op = static_cast<EdgeOp>(rng.uniform_int(kNumEdgeOps));
      arch.cells = 1 + static_cast<int>(rng.uniform_int(3));
      CHECK(decode(encode(arch)) == arch);
    }
  }
}

TEST_CASE("decode rejects malformed strings with a byte offset") {
  CHECK_THROWS_AS(decode("skip|skip"), ParseError);
  CHECK_THROWS_AS(decode("|skip|skip|skip|skip|skip|skip"), ParseError);
  CHECK_THROWS_AS(decode("|skip|skip|skip|skip|skip|skip|x0"), ParseError);
  CHECK_THROWS_AS(decode("|skip|skip|skip|skip|skip|skip|x1junk"), ParseError);
  try {
    decode("|skip|conv|skip|skip|skip|skip|x1");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 6);  // first byte of the unknown label
  }
}

TEST_CASE("space cardinality is 5^6") { CHECK(space_cardinality() == 15625); }

TEST_CASE("sample_pool is deterministic and unique") {
  const ArchPool a = sample_pool(10, 7);
  const ArchPool b = sample_pool(10, 7);
  CHECK(a.ids == b.ids);

  const ArchPool big = sample_pool(1000, 3);
  std::set<std::string> ids(big.ids.begin(), big.ids.end());
  CHECK(ids.size() == 1000);

  CHECK_THROWS_AS(sample_pool(15626, 0), ConfigError);
  CHECK_THROWS_AS(sample_pool(0, 0), ConfigError);
}

TEST_CASE("enumeration walks ops in lexical order") {
  const ArchPool pool = enumerate_pool(5);
  REQUIRE(pool.size() == 5);
  CHECK(pool.ids[0] == "|zero|zero|zero|zero|zero|zero|x1");
  CHECK(pool.ids[1] == "|zero|zero|zero|zero|zero|skip|x1");
  CHECK(pool.ids[2] == "|zero|zero|zero|zero|zero|linear|x1");
  CHECK(pool.ids[3] == "|zero|zero|zero|zero|zero|linear_relu|x1");
  CHECK(pool.ids[4] == "|zero|zero|zero|zero|zero|linear_tanh|x1");
}

TEST_CASE("round-trip across a 2000-arch enumerated prefix") {
  const ArchPool pool = enumerate_pool(2000);
  for (std::size_t i = 0; i < pool.size(); ++i) CHECK(decode(pool.ids[i]) == pool.entries[i]);
}

TEST_CASE("sampling is uniform on edge (0,1)") {
  // 50000 draws; each op should land within 0.2 +/- 0.02.
  Rng rng(99);
  std::array<int, kNumEdgeOps> counts{};
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) {
    const std::size_t idx = rng.uniform_int(space_cardinality());
    CellArch arch;
    std::size_t rem = idx;
    for (int e = kNumCellEdges - 1; e >= 0; --e) {
      arch.edge_ops[e] = static_cast<EdgeOp>(rem % kNumEdgeOps);
      rem /= kNumEdgeOps;
    }
    ++counts[static_cast<int>(arch.edge_ops[0])];
  }
  for (const int c : counts)
    CHECK(std::abs(static_cast<double>(c) / draws - 0.2) < 0.02);
}

TEST_CASE("pool files round-trip and reject unknown ops") {
  const auto dir = std::filesystem::temp_directory_path() / "ntklab-pool-test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "pool.json";

  const ArchPool pool = sample_pool(25, 5);
  save_pool(pool, path);
  const ArchPool loaded = load_pool(path);
  CHECK(loaded.ids == pool.ids);
  CHECK(loaded.provenance == ArchPool::Provenance::file);

  std::ofstream bad(path);
  bad << "[\"|skip|skip|conv3x3|skip|skip|skip|x1\"]";
  bad.close();
  CHECK_THROWS_AS(load_pool(path), ParseError);
  std::filesystem::remove_all(dir);
}
