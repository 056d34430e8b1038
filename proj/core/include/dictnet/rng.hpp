#pragma once

#include <cstdint>
#include <vector>

namespace dictnet {

/// Deterministic pseudo-random generator used everywhere seeds appear.
///
/// The engine is xoshiro256** seeded through splitmix64, with all
/// distributions implemented here explicitly, so a given seed produces the
/// same stream on every platform and standard library. Nothing in the
/// project may draw randomness from std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Unbiased integer in [0, bound). bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 bits of mantissa.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Normal with the given mean and standard deviation.
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// One splitmix64 step; also the hash used to derive sub-seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministically derive an independent seed from (seed, tag).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// FNV-1a over raw bytes; used for provenance digests of source data.
std::uint64_t fnv1a(const void* data, std::size_t bytes);

}  // namespace dictnet
