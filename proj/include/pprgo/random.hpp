#pragma once

// Seeded, platform-stable random streams. std::mt19937_64 output is fixed by
// the standard; the distributions below are written out so results do not
// depend on the standard library's distribution implementations.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pprgo {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from (seed, tag, counter).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t counter = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ counter);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t counter = 0)
      : engine_(stream_seed(seed, tag, counter)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound), bound > 0 (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound) {
    __uint128_t product = static_cast<__uint128_t>(next()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<__uint128_t>(next()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

 private:
  std::mt19937_64 engine_;
};

/// Stream tags, one per consumer, so that adding a consumer never perturbs another.
namespace stream {
inline constexpr std::uint64_t split = 0x5b17;
inline constexpr std::uint64_t init = 0x1417;
inline constexpr std::uint64_t epoch_shuffle = 0xe90c;
inline constexpr std::uint64_t dropout = 0xd209;
inline constexpr std::uint64_t degree_cap = 0xdca9;
inline constexpr std::uint64_t sparse_logits = 0x5a10;
}  // namespace stream

}  // namespace pprgo
