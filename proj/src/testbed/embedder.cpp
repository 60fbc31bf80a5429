#include "sdat/testbed/embedder.hpp"

#include <array>

#include "sdat/numerics/rng.hpp"

namespace sdat::testbed {

numerics::FrozenNetwork make_embedder(std::uint64_t seed) {
  numerics::Rng rng(seed);
  constexpr std::array<std::size_t, 3> kWidths{2, 16, 8};
  auto params = numerics::MlpParams::init(kWidths, rng);
  // Nonzero biases keep the embedding away from the origin, where the cosine
  // in the distillation term is undefined.
  for (auto& layer : params.layers) {
    for (double& b : layer.bias.values()) b = rng.normal();
  }
  return numerics::FrozenNetwork(std::move(params));
}

}  // namespace sdat::testbed
