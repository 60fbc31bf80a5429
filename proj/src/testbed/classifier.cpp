#include "sdat/testbed/classifier.hpp"

#include <numeric>
#include <set>
#include <string>

#include "sdat/errors.hpp"
#include "sdat/numerics/adam.hpp"
#include "sdat/numerics/ops.hpp"

namespace sdat::testbed {

using numerics::MlpParams;
using numerics::Tensor;

namespace {

Tensor gather_rows(const Tensor& src, std::span<const std::size_t> idx) {
  Tensor out({idx.size(), src.cols()});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(src.row(idx[i]).begin(), src.row(idx[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

numerics::ProbBatch class_probabilities(const MlpParams& classifier, const Tensor& points) {
  Tensor logits = numerics::mlp_apply(classifier, points);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto p = numerics::softmax(logits.row(i));
    std::copy(p.begin(), p.end(), logits.row(i).begin());
  }
  return numerics::ProbBatch(std::move(logits));
}

std::vector<std::size_t> classify(const MlpParams& classifier, const Tensor& points) {
  const Tensor logits = numerics::mlp_apply(classifier, points);
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = numerics::argmax(logits.row(i));
  return out;
}

double accuracy(const MlpParams& classifier, const Tensor& points,
                const std::vector<std::size_t>& labels) {
  if (labels.empty()) return 0.0;
  const auto predicted = classify(classifier, points);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

TrainedClassifier train_classifier(const TargetDataset& dataset, std::size_t epochs,
                                   numerics::Rng& rng, const ClassifierOptions& options) {
  const std::size_t k = std::max<std::size_t>(dataset.declared_weights.size(), 2);
  const std::set<std::size_t> present(dataset.labels.begin(), dataset.labels.end());
  if (present.size() < 2) {
    throw TrainingFailure("train_classifier: dataset contains fewer than two subgroups");
  }
  if (*present.rbegin() >= k) throw ArgumentError("train_classifier: label out of range");

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  const auto heldout_n = static_cast<std::size_t>(
      static_cast<double>(order.size()) * options.holdout_fraction);
  if (heldout_n == 0 || heldout_n >= order.size()) {
    throw ArgumentError("train_classifier: dataset too small for the held-out split");
  }
  const std::span<const std::size_t> train_idx(order.data(), order.size() - heldout_n);
  const std::span<const std::size_t> held_idx(order.data() + train_idx.size(), heldout_n);

  const Tensor train_x = gather_rows(dataset.samples, train_idx);
  std::vector<std::size_t> train_y, held_y;
  for (std::size_t i : train_idx) train_y.push_back(dataset.labels[i]);
  for (std::size_t i : held_idx) held_y.push_back(dataset.labels[i]);
  const Tensor held_x = gather_rows(dataset.samples, held_idx);

  std::vector<std::size_t> widths{dataset.samples.cols()};
  widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
  widths.push_back(k);
  MlpParams params = MlpParams::init(widths, rng);
  auto adam = numerics::AdamState::for_params(params);

  numerics::ValueGraph graph;
  const double inv_n = 1.0 / static_cast<double>(train_y.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    graph.clear();
    const auto bound = numerics::bind(graph, params);
    const auto probs = numerics::softmax_rows(
        graph, numerics::mlp_forward(graph, bound, numerics::constants(graph, train_x)));
    std::vector<numerics::NodeId> terms(train_y.size());
    for (std::size_t i = 0; i < train_y.size(); ++i) {
      terms[i] = numerics::cross_entropy(graph, probs.row(i), train_y[i]);
    }
    const auto loss = graph.scale(graph.sum(terms), inv_n);
    numerics::adam_step(params, numerics::gradients(bound, graph.backward(loss)), adam,
                        options.lr);
  }

  TrainedClassifier out;
  out.heldout_accuracy = accuracy(params, held_x, held_y);
  out.train_size = train_y.size();
  out.heldout_size = held_y.size();
  if (out.heldout_accuracy < options.min_accuracy) {
    throw TrainingFailure("train_classifier: held-out accuracy " +
                          std::to_string(out.heldout_accuracy) + " below " +
                          std::to_string(options.min_accuracy));
  }
  out.network = numerics::FrozenNetwork(std::move(params));
  return out;
}

}  // namespace sdat::testbed
