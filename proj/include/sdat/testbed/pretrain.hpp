#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sdat/numerics/mlp.hpp"
#include "sdat/numerics/rng.hpp"
#include "sdat/testbed/generator.hpp"

namespace sdat::testbed {

struct PretrainOptions {
  GeneratorSpec generator;
  std::size_t batch_size = 128;
  double lr = 3e-3;
  // Quality bar, checked only when a classifier is supplied and steps > 0.
  std::size_t check_samples = 2000;
  double frequency_tolerance = 0.05;
};

struct PretrainResult {
  Generator generator;
  double bandwidth = 0.0;           // median heuristic on the biased sample, then frozen
  std::vector<double> mmd_curve;    // per-step minibatch MMD^2
  std::optional<std::vector<double>> frequencies;  // classifier-estimated, if checked
};

// Fits a fresh generator to a stratified sample of n_target points drawn with
// mixture weights `biased_weights`, by Adam on the RBF MMD between generated
// and sampled minibatches. With a classifier, throws TrainingFailure when the
// estimated frequency of subgroup 0 misses biased_weights[0] by more than
// options.frequency_tolerance.
PretrainResult pretrain_generator(std::span<const double> biased_weights,
                                  std::size_t n_target, std::size_t steps,
                                  numerics::Rng& rng,
                                  const numerics::MlpParams* classifier = nullptr,
                                  const PretrainOptions& options = {});

// Fraction of `n` generated samples per argmax class.
std::vector<double> classified_frequencies(const Generator& gen,
                                           const numerics::MlpParams& classifier,
                                           std::size_t n, numerics::Rng& rng);

}  // namespace sdat::testbed
