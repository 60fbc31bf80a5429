#pragma once

#include <cstddef>
#include <vector>

#include "sdat/numerics/mlp.hpp"
#include "sdat/numerics/prob_batch.hpp"
#include "sdat/numerics/rng.hpp"
#include "sdat/testbed/population.hpp"

namespace sdat::testbed {

struct ClassifierOptions {
  std::vector<std::size_t> hidden{16, 16};
  double lr = 1e-2;
  double holdout_fraction = 0.25;
  double min_accuracy = 0.99;
};

struct TrainedClassifier {
  numerics::FrozenNetwork network;
  double heldout_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t heldout_size = 0;
};

// Full-batch Adam on softmax cross-entropy, one step per epoch, over a random
// split of `dataset`. Throws TrainingFailure when a subgroup is missing or the
// held-out accuracy ends below options.min_accuracy.
TrainedClassifier train_classifier(const TargetDataset& dataset, std::size_t epochs,
                                   numerics::Rng& rng, const ClassifierOptions& options = {});

// Softmax histograms of the classifier on each row of `points`.
numerics::ProbBatch class_probabilities(const numerics::MlpParams& classifier,
                                        const numerics::Tensor& points);
// Argmax class per row (lowest index on ties).
std::vector<std::size_t> classify(const numerics::MlpParams& classifier,
                                  const numerics::Tensor& points);

double accuracy(const numerics::MlpParams& classifier, const numerics::Tensor& points,
                const std::vector<std::size_t>& labels);

}  // namespace sdat::testbed
