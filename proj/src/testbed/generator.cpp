#include "sdat/testbed/generator.hpp"

#include <string>

#include "sdat/errors.hpp"

namespace sdat::testbed {

using numerics::Tensor;

Generator Generator::init(const GeneratorSpec& spec, numerics::Rng& rng) {
  if (spec.noise_dim == 0) throw ArgumentError("generator noise_dim must be positive");
  if (spec.conditions == 0) throw ArgumentError("generator needs at least one condition");
  Generator gen;
  gen.noise_dim = spec.noise_dim;
  gen.conditions = spec.conditions;
  std::vector<std::size_t> widths{gen.input_width()};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.output_dim);
  gen.params = numerics::MlpParams::init(widths, rng);
  return gen;
}

void Generator::validate() const {
  params.validate();
  if (params.input_width() != input_width()) {
    throw ShapeError("generator input width " + std::to_string(params.input_width()) +
                     " does not match noise_dim + conditions = " +
                     std::to_string(input_width()));
  }
}

Tensor sample_noise(std::size_t n, std::size_t dim, numerics::Rng& rng) {
  Tensor z({n, dim});
  for (double& v : z.values()) v = rng.normal();
  return z;
}

Tensor generator_inputs(const Generator& gen, const Tensor& noise,
                        std::span<const std::size_t> conditions) {
  if (noise.cols() != gen.noise_dim) throw ShapeError("noise width does not match generator");
  const std::size_t n = noise.rows();
  const std::size_t extra = gen.condition_width();
  if (extra == 0) return noise;
  if (conditions.size() != n) throw ShapeError("one condition per noise row required");
  Tensor in({n, gen.input_width()});
  for (std::size_t i = 0; i < n; ++i) {
    if (conditions[i] >= gen.conditions) throw ArgumentError("condition id out of range");
    auto row = in.row(i);
    std::copy(noise.row(i).begin(), noise.row(i).end(), row.begin());
    row[gen.noise_dim + conditions[i]] = 1.0;
  }
  return in;
}

GeneratedBatch draw_latents(const Generator& gen, std::size_t n, numerics::Rng& rng,
                            std::optional<std::size_t> condition) {
  if (n == 0) throw ArgumentError("generate_batch: n must be at least 1");
  if (condition && *condition >= gen.conditions) {
    throw ArgumentError("condition id out of range");
  }
  GeneratedBatch batch;
  batch.noise = sample_noise(n, gen.noise_dim, rng);
  if (gen.conditions > 1) {
    batch.conditions.resize(n);
    for (auto& c : batch.conditions) c = condition ? *condition : rng.below(gen.conditions);
  }
  return batch;
}

GeneratedBatch generate_batch(const Generator& gen, std::size_t n, numerics::Rng& rng,
                              std::optional<std::size_t> condition) {
  GeneratedBatch batch = draw_latents(gen, n, rng, condition);
  batch.points = replay(gen, batch.noise, batch.conditions);
  return batch;
}

Tensor replay(const Generator& gen, const Tensor& noise,
              std::span<const std::size_t> conditions) {
  return numerics::mlp_apply(gen.params, generator_inputs(gen, noise, conditions));
}

}  // namespace sdat::testbed
