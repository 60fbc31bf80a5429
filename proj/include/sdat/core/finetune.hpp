#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "sdat/core/pseudo_labels.hpp"
#include "sdat/fairness/bias.hpp"
#include "sdat/numerics/adam.hpp"
#include "sdat/numerics/mlp.hpp"
#include "sdat/numerics/prob_batch.hpp"
#include "sdat/numerics/rng.hpp"
#include "sdat/testbed/generator.hpp"

namespace sdat::core {

struct SdatConfig {
  double tau = 0.8;              // confidence gate
  double lambda_reg = 1.0;       // weight on the distillation term
  std::size_t batch_size = 64;   // N
  std::size_t steps = 2000;
  std::size_t target_batches = 1;  // M target draws averaged into q
  double lr = 1e-3;
  std::uint64_t seed = 0;
  ConfidenceSource confidence_source = ConfidenceSource::kTarget;

  void validate() const;
};

// Classifier histograms of a fixed target pool, drawn i.i.d. with replacement.
// The classifier is frozen, so the histograms are computed once.
class TargetSampler {
 public:
  TargetSampler(const numerics::Tensor& points, const numerics::MlpParams& classifier);

  numerics::ProbBatch draw(std::size_t n, numerics::Rng& rng) const;
  std::size_t size() const { return histograms_.n(); }

 private:
  numerics::ProbBatch histograms_;
};

// Networks that take part in a step but are never updated.
struct SdatModels {
  const testbed::Generator& frozen_generator;
  const numerics::FrozenNetwork& classifier;
  const numerics::FrozenNetwork& embedder;
};

struct StepMetrics {
  std::size_t step = 0;
  double l_align = 0.0;
  double l_reg = 0.0;
  double total = 0.0;
  std::size_t gate_passed = 0;
  double gate_rate = 0.0;
  double transport_cost = 0.0;  // optimal matching cost, mean over target batches
  double identity_cost = 0.0;   // cost of matching row i to row i, same averaging
};

struct StepObjective {
  numerics::NodeId align = 0;
  numerics::NodeId total = 0;  // align + lambda * reg
  double l_reg = 0.0;          // measured even when lambda is zero
};

// L_align + lambda * L_reg on the graph, given generated points `x`, their
// class histograms `p` and fixed pseudo-labels. With lambda == 0 the
// regulariser stays off the graph.
StepObjective sdat_objective(numerics::ValueGraph& graph, const numerics::NodeTensor& x,
                             const numerics::NodeTensor& p, const PseudoLabelBatch& labels,
                             const numerics::MlpParams& embedder,
                             const numerics::Tensor& anchor_embed, double tau, double lambda_reg);

// Plain evaluation of the same objective for generator parameters `generator`
// on network inputs `inputs`, pseudo-labels held fixed.
double sdat_objective_value(const numerics::MlpParams& generator, const numerics::Tensor& inputs,
                            const numerics::MlpParams& classifier,
                            const numerics::MlpParams& embedder,
                            const numerics::Tensor& anchor_embed, const PseudoLabelBatch& labels,
                            double tau, double lambda_reg);

// One optimisation step on `generator`:
//   noise z_i -> x_i = G(z_i), o_i = G_frozen(z_i)
//   p_i = softmax(classifier(x_i)), targets u from M pool draws
//   pseudo-labels from the optimal matchings (constants for this step)
//   loss = L_align + lambda * L_reg, Adam update of the generator only.
// L_reg is still measured when lambda is zero, but not differentiated.
StepMetrics sdat_step(testbed::Generator& generator, numerics::AdamState& adam,
                      const SdatModels& models, const TargetSampler& targets,
                      const SdatConfig& cfg, numerics::Rng& rng, std::size_t step_index = 0);

struct FinetuneOptions {
  // Bias snapshot every `eval_every` steps (0 disables), each on the same
  // noise drawn from `eval_seed`.
  std::size_t eval_every = 0;
  std::size_t eval_samples = 2000;
  fairness::FrequencyVector target_freq;
  fairness::CountingMode counting = fairness::CountingMode::kArgmax;
  std::uint64_t eval_seed = 0;
  std::function<void(const StepMetrics&)> on_step;
};

struct Snapshot {
  std::size_t step = 0;
  fairness::BiasReport report;
};

struct FinetuneResult {
  testbed::Generator generator;
  std::vector<StepMetrics> log;
  std::vector<Snapshot> snapshots;
};

// cfg.steps applications of sdat_step starting from `start`, with a fresh
// Adam state.
FinetuneResult sdat_finetune(const testbed::Generator& start, const SdatModels& models,
                             const TargetSampler& targets, const SdatConfig& cfg,
                             numerics::Rng& rng, const FinetuneOptions& options = {});

// Mean 1 - cos between embeddings of `tuned` and `frozen` outputs on the same
// noise rows.
double embedding_dissimilarity(const testbed::Generator& tuned,
                               const testbed::Generator& frozen,
                               const numerics::MlpParams& embedder,
                               const numerics::Tensor& noise,
                               std::span<const std::size_t> conditions = {});

}  // namespace sdat::core
