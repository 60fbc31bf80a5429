#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace sdat::numerics {

// Seeded random stream. The distributions are implemented here rather than
// through <random>'s distribution classes, whose output is
// implementation-defined; only the raw mt19937_64 engine is used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream derived from (seed, stream) by a splitmix64 mix.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);
  // The engine seed behind derive(seed, stream).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  // Uniform integer in [0, bound); bound > 0. Rejection sampled, unbiased.
  std::size_t below(std::size_t bound);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sdat::numerics
