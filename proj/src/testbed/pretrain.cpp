#include "sdat/testbed/pretrain.hpp"

#include <cmath>
#include <string>

#include "sdat/errors.hpp"
#include "sdat/numerics/adam.hpp"
#include "sdat/numerics/ops.hpp"
#include "sdat/testbed/classifier.hpp"
#include "sdat/testbed/population.hpp"

namespace sdat::testbed {

using numerics::Tensor;

std::vector<double> classified_frequencies(const Generator& gen,
                                           const numerics::MlpParams& classifier,
                                           std::size_t n, numerics::Rng& rng) {
  if (n == 0) throw ArgumentError("classified_frequencies: n must be at least 1");
  const auto labels = classify(classifier, generate_batch(gen, n, rng).points);
  std::vector<double> freq(classifier.output_width(), 0.0);
  for (std::size_t y : labels) freq[y] += 1.0;
  for (double& f : freq) f /= static_cast<double>(n);
  return freq;
}

PretrainResult pretrain_generator(std::span<const double> biased_weights,
                                  std::size_t n_target, std::size_t steps,
                                  numerics::Rng& rng, const numerics::MlpParams* classifier,
                                  const PretrainOptions& options) {
  const auto spec = PopulationSpec::two_mode({biased_weights.begin(), biased_weights.end()});
  if (options.batch_size == 0) throw ArgumentError("pretrain: batch_size must be positive");
  const TargetDataset target = sample_population(spec, n_target, rng);

  PretrainResult out;
  out.bandwidth = numerics::median_pairwise_distance(target.samples);
  out.generator = Generator::init(options.generator, rng);
  out.mmd_curve.reserve(steps);
  auto adam = numerics::AdamState::for_params(out.generator.params);

  const std::size_t b = options.batch_size;
  numerics::ValueGraph graph;
  Tensor real({b, target.samples.cols()});
  for (std::size_t step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < b; ++i) {
      auto src = target.samples.row(rng.below(target.size()));
      std::copy(src.begin(), src.end(), real.row(i).begin());
    }
    const GeneratedBatch noise = draw_latents(out.generator, b, rng);
    const Tensor inputs = generator_inputs(out.generator, noise.noise, noise.conditions);

    graph.clear();
    const auto bound = numerics::bind(graph, out.generator.params);
    const auto fake =
        numerics::mlp_forward(graph, bound, numerics::constants(graph, inputs));
    const auto loss = numerics::mmd_rbf(graph, fake, real, out.bandwidth);
    out.mmd_curve.push_back(graph.value(loss));
    numerics::adam_step(out.generator.params,
                        numerics::gradients(bound, graph.backward(loss)), adam, options.lr);
  }

  if (classifier != nullptr && steps > 0) {
    out.frequencies =
        classified_frequencies(out.generator, *classifier, options.check_samples, rng);
    const double miss = std::abs((*out.frequencies)[0] - biased_weights[0]);
    if (miss > options.frequency_tolerance) {
      throw TrainingFailure("pretrain_generator: subgroup-0 frequency " +
                            std::to_string((*out.frequencies)[0]) + " misses target " +
                            std::to_string(biased_weights[0]) + " by more than " +
                            std::to_string(options.frequency_tolerance));
    }
  }
  return out;
}

}  // namespace sdat::testbed
