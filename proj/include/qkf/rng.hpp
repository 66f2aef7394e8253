// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qkf {

/// SplitMix64 step. Used for seeding and for deriving sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive mix of a seed with stream coordinates, e.g. (seed, i, j)
/// for per-entry Gram seeds. Independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// FNV-1a 64-bit hash, used for config and dataset fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// xoshiro256** 1.0 (Blackman & Vigna), state seeded by four SplitMix64
/// outputs of the user seed. The algorithm is fixed so a seed yields the same
/// stream on every platform. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next(); }

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound) by rejection (unbiased).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller; the spare value is cached.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

}  // namespace qkf
