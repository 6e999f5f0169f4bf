#pragma once

#include <cstdint>
#include <string_view>

namespace ntklab {

/// Deterministic counter-based generator (SplitMix64 stream). All randomness
/// in the library flows through this type so results are reproducible
/// bit-for-bit given the same seed, independent of the platform's
/// std::normal_distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// FNV-1a 64-bit hash.
std::uint64_t hash64(std::string_view s);

/// One SplitMix64 scramble of x (stateless).
std::uint64_t scramble64(std::uint64_t x);

/// Derives an independent child seed from a parent seed and a string tag
/// (e.g. a canonical architecture ID). seed' = scramble(seed ^ GOLDEN*fnv(tag)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

/// Derives an independent child seed from a parent seed and an index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace ntklab
