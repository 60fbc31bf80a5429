#pragma once

#include <cstdint>

#include "sdat/numerics/mlp.hpp"

namespace sdat::testbed {

inline constexpr std::uint64_t kDefaultEmbedderSeed = 0x5eed0e3bULL;

// Untrained 2 -> 16 -> 8 tanh MLP (random weights and biases) used as a fixed semantic anchor for the
// distillation term. Same seed, same network.
numerics::FrozenNetwork make_embedder(std::uint64_t seed = kDefaultEmbedderSeed);

}  // namespace sdat::testbed
