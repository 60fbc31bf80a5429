#include "sdat/core/finetune.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sdat/core/losses.hpp"
#include "sdat/errors.hpp"
#include "sdat/numerics/ops.hpp"
#include "sdat/testbed/classifier.hpp"

namespace sdat::core {

using numerics::NodeId;
using numerics::Tensor;

void SdatConfig::validate() const {
  // tau > 1 is allowed and closes the gate for every sample.
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ArgumentError("tau must be finite and >= 0");
  if (!(lambda_reg >= 0.0)) throw ArgumentError("lambda_reg must be >= 0");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (target_batches < 1) throw ArgumentError("target_batches must be >= 1");
  if (!(lr > 0.0)) throw ArgumentError("lr must be positive");
}

TargetSampler::TargetSampler(const Tensor& points, const numerics::MlpParams& classifier)
    : histograms_(testbed::class_probabilities(classifier, points)) {
  if (histograms_.n() == 0) throw ArgumentError("target pool is empty");
}

numerics::ProbBatch TargetSampler::draw(std::size_t n, numerics::Rng& rng) const {
  Tensor rows({n, histograms_.k()});
  for (std::size_t i = 0; i < n; ++i) {
    auto src = histograms_.row(rng.below(histograms_.n()));
    std::copy(src.begin(), src.end(), rows.row(i).begin());
  }
  return numerics::ProbBatch(std::move(rows));
}

StepObjective sdat_objective(numerics::ValueGraph& graph, const numerics::NodeTensor& x,
                             const numerics::NodeTensor& p, const PseudoLabelBatch& labels,
                             const numerics::MlpParams& embedder, const Tensor& anchor_embed,
                             double tau, double lambda_reg) {
  StepObjective out;
  out.align = alignment_loss(graph, p, labels, tau);
  out.total = out.align;
  if (lambda_reg > 0.0) {
    const NodeId reg =
        consistency_reg(graph, numerics::mlp_forward(graph, embedder, x), anchor_embed);
    out.l_reg = graph.value(reg);
    out.total = graph.add(out.align, graph.scale(reg, lambda_reg));
  } else {
    out.l_reg =
        consistency_reg(numerics::mlp_apply(embedder, numerics::values(graph, x)), anchor_embed);
  }
  return out;
}

double sdat_objective_value(const numerics::MlpParams& generator, const Tensor& inputs,
                            const numerics::MlpParams& classifier,
                            const numerics::MlpParams& embedder, const Tensor& anchor_embed,
                            const PseudoLabelBatch& labels, double tau, double lambda_reg) {
  const Tensor x = numerics::mlp_apply(generator, inputs);
  const Tensor logits = numerics::mlp_apply(classifier, x);
  Tensor probs(logits.shape());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = numerics::softmax(logits.row(i));
    std::copy(row.begin(), row.end(), probs.row(i).begin());
  }
  const double align = alignment_loss(numerics::ProbBatch(std::move(probs)), labels, tau);
  if (!(lambda_reg > 0.0)) return align;
  return align + consistency_reg(numerics::mlp_apply(embedder, x), anchor_embed) * lambda_reg;
}

StepMetrics sdat_step(testbed::Generator& generator, numerics::AdamState& adam,
                      const SdatModels& models, const TargetSampler& targets,
                      const SdatConfig& cfg, numerics::Rng& rng, std::size_t step_index) {
  const std::size_t n = cfg.batch_size;
  const auto& classifier = models.classifier.params();
  const auto& embedder = models.embedder.params();

  const auto latents = testbed::draw_latents(generator, n, rng);
  const Tensor inputs = testbed::generator_inputs(generator, latents.noise, latents.conditions);
  // Same noise through the untouched copy.
  const Tensor anchor_points =
      testbed::replay(models.frozen_generator, latents.noise, latents.conditions);
  const Tensor anchor_embed = numerics::mlp_apply(embedder, anchor_points);

  numerics::ValueGraph graph;
  graph.reserve(n * 512, n * 4096);
  const auto bound = numerics::bind(graph, generator.params);
  const auto x = numerics::mlp_forward(graph, bound, numerics::constants(graph, inputs));
  const auto p = numerics::softmax_rows(graph, numerics::mlp_forward(graph, classifier, x));

  std::vector<numerics::ProbBatch> target_batches;
  target_batches.reserve(cfg.target_batches);
  for (std::size_t m = 0; m < cfg.target_batches; ++m) {
    target_batches.push_back(targets.draw(n, rng));
  }
  const numerics::ProbBatch generated(numerics::values(graph, p));
  const PseudoLabelBatch labels = pseudo_labels(generated, target_batches, cfg.confidence_source);

  StepMetrics metrics;
  metrics.step = step_index;
  const auto objective =
      sdat_objective(graph, x, p, labels, embedder, anchor_embed, cfg.tau, cfg.lambda_reg);
  const NodeId total = objective.total;
  metrics.l_align = graph.value(objective.align);
  metrics.l_reg = objective.l_reg;
  metrics.total = graph.value(total);
  metrics.gate_passed = gate_count(labels, cfg.tau);
  metrics.gate_rate = static_cast<double>(metrics.gate_passed) / static_cast<double>(n);

  const auto identity = transport::identity_permutation(n);
  for (std::size_t m = 0; m < labels.matches.size(); ++m) {
    const double optimal = labels.matches[m].cost;
    const double diagonal = transport::assignment_cost(
        transport::l1_cost_matrix(generated, target_batches[m]), identity);
    if (optimal > diagonal + 1e-12) {
      throw std::logic_error("optimal matching costs more than the identity matching");
    }
    metrics.transport_cost += optimal;
    metrics.identity_cost += diagonal;
  }
  metrics.transport_cost /= static_cast<double>(labels.matches.size());
  metrics.identity_cost /= static_cast<double>(labels.matches.size());

  numerics::adam_step(generator.params, numerics::gradients(bound, graph.backward(total)), adam,
                      cfg.lr);
  return metrics;
}

FinetuneResult sdat_finetune(const testbed::Generator& start, const SdatModels& models,
                             const TargetSampler& targets, const SdatConfig& cfg,
                             numerics::Rng& rng, const FinetuneOptions& options) {
  cfg.validate();
  if (cfg.steps < 1) throw ArgumentError("sdat_finetune: steps must be >= 1");
  start.validate();
  if (models.classifier.params().input_width() != start.params.output_width()) {
    throw ShapeError("classifier input width does not match generator output");
  }

  FinetuneResult out;
  out.generator = start;
  out.log.reserve(cfg.steps);
  auto adam = numerics::AdamState::for_params(out.generator.params);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    out.log.push_back(sdat_step(out.generator, adam, models, targets, cfg, rng, s + 1));
    if (options.on_step) options.on_step(out.log.back());
    if (options.eval_every > 0 && (s + 1) % options.eval_every == 0) {
      auto eval_rng = numerics::Rng(options.eval_seed);
      out.snapshots.push_back(
          {s + 1, fairness::evaluate(out.generator, models.classifier.params(),
                                     options.target_freq, options.eval_samples, eval_rng,
                                     options.counting)});
    }
  }
  return out;
}

double embedding_dissimilarity(const testbed::Generator& tuned,
                               const testbed::Generator& frozen,
                               const numerics::MlpParams& embedder, const Tensor& noise,
                               std::span<const std::size_t> conditions) {
  const Tensor a = numerics::mlp_apply(embedder, testbed::replay(tuned, noise, conditions));
  const Tensor b = numerics::mlp_apply(embedder, testbed::replay(frozen, noise, conditions));
  return consistency_reg(a, b);
}

}  // namespace sdat::core
