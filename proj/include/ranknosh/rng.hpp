#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ranknosh {

// Seeded random source with platform-independent draws.
//
// std::mt19937_64 is fully specified by the standard, but the std::*_distribution
// adaptors are not, so bounded integers, uniform reals and normals are derived
// here directly from the engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via the Marsaglia polar method.
  double normal();

  bool coin() { return (next_u64() >> 63) != 0; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  // k distinct indices from [0, n), in draw order. Requires k <= n.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent seed for a named sub-stream of a run.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

// Stream identifiers used with derive_seed.
namespace stream {
inline constexpr std::uint64_t kUniverse = 1;
inline constexpr std::uint64_t kInitialPool = 2;
inline constexpr std::uint64_t kRankerInit = 3;
inline constexpr std::uint64_t kRankerShuffle = 4;
inline constexpr std::uint64_t kReference = 5;
inline constexpr std::uint64_t kProposal = 6;
inline constexpr std::uint64_t kRandomSearch = 7;
inline constexpr std::uint64_t kPriorOnly = 8;
inline constexpr std::uint64_t kSynthetic = 9;
}  // namespace stream

}  // namespace ranknosh
