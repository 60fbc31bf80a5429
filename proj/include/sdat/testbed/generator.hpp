#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sdat/numerics/mlp.hpp"
#include "sdat/numerics/rng.hpp"
#include "sdat/numerics/tensor.hpp"

namespace sdat::testbed {

struct GeneratorSpec {
  std::size_t noise_dim = 4;
  std::vector<std::size_t> hidden{32, 32};
  std::size_t output_dim = 2;
  // Number of integer condition IDs. With more than one, the condition is
  // appended to the noise as a one-hot block; a single condition adds no input.
  std::size_t conditions = 1;
};

// Pushforward generator: standard normal noise (plus condition one-hot) to a
// point in the plane.
struct Generator {
  numerics::MlpParams params;
  std::size_t noise_dim = 4;
  std::size_t conditions = 1;

  static Generator init(const GeneratorSpec& spec, numerics::Rng& rng);

  std::size_t condition_width() const { return conditions > 1 ? conditions : 0; }
  std::size_t input_width() const { return noise_dim + condition_width(); }
  // Throws ShapeError if params do not fit noise_dim / conditions.
  void validate() const;

  bool operator==(const Generator&) const = default;
};

struct GeneratedBatch {
  numerics::Tensor points;              // [n, output_dim]
  numerics::Tensor noise;               // [n, noise_dim]
  std::vector<std::size_t> conditions;  // per sample, empty when unconditional
};

numerics::Tensor sample_noise(std::size_t n, std::size_t dim, numerics::Rng& rng);

// Network input rows: noise followed by the condition one-hot, if any.
numerics::Tensor generator_inputs(const Generator& gen, const numerics::Tensor& noise,
                                  std::span<const std::size_t> conditions);

// Draws noise and conditions only; `points` is left empty.
GeneratedBatch draw_latents(const Generator& gen, std::size_t n, numerics::Rng& rng,
                            std::optional<std::size_t> condition = std::nullopt);

// Draws noise (and, for conditional generators, a uniform condition per
// sample unless `condition` pins one) and returns it alongside the points so
// another generator can be run on identical inputs.
GeneratedBatch generate_batch(const Generator& gen, std::size_t n, numerics::Rng& rng,
                              std::optional<std::size_t> condition = std::nullopt);

// Runs `gen` on previously drawn noise and conditions.
numerics::Tensor replay(const Generator& gen, const numerics::Tensor& noise,
                        std::span<const std::size_t> conditions);

}  // namespace sdat::testbed
