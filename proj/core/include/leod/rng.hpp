// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace leod {

/// SplitMix64 step; used only to expand a 64-bit seed into generator state.
std::uint64_t splitmix64(std::uint64_t& state);

/// xoshiro256** generator. All derived draws (uniform doubles, bounded
/// integers, shuffles, normals) are defined here rather than through <random>
/// distributions so that sequences are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal by Box-Muller (one draw per call, no caching).
  double normal();

  /// Poisson by Knuth multiplication; intended for small means.
  int poisson(double mean);

  /// Fisher-Yates from the back: for i = n-1..1 swap(i, below(i+1)).
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace leod
