#include "sdat/core/losses.hpp"

#include <vector>

#include "sdat/errors.hpp"
#include "sdat/numerics/ops.hpp"

namespace sdat::core {

using numerics::NodeId;

namespace {

void check_labels(std::size_t n, std::size_t k, const PseudoLabelBatch& labels) {
  if (labels.y.size() != n || labels.c.size() != n) {
    throw ShapeError("alignment_loss: label count does not match batch size");
  }
  if (labels.q.k() != k) throw ShapeError("alignment_loss: subgroup count mismatch");
}

}  // namespace

std::size_t gate_count(const PseudoLabelBatch& labels, double tau) {
  std::size_t passed = 0;
  for (double c : labels.c) passed += c >= tau;
  return passed;
}

double alignment_loss(const numerics::ProbBatch& p, const PseudoLabelBatch& labels,
                      double tau) {
  check_labels(p.n(), p.k(), labels);
  if (p.n() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    if (labels.c[i] >= tau) acc += numerics::cross_entropy(p.row(i), labels.y[i]);
  }
  return acc * (1.0 / static_cast<double>(p.n()));
}

NodeId alignment_loss(numerics::ValueGraph& graph, const numerics::NodeTensor& p,
                      const PseudoLabelBatch& labels, double tau) {
  const std::size_t n = p.rows();
  check_labels(n, p.cols(), labels);
  std::vector<NodeId> terms;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.c[i] >= tau) terms.push_back(numerics::cross_entropy(graph, p.row(i), labels.y[i]));
  }
  if (n == 0) return graph.constant(0.0);
  return graph.scale(graph.sum(terms), 1.0 / static_cast<double>(n));
}

double consistency_reg(const numerics::Tensor& tuned, const numerics::Tensor& frozen) {
  numerics::require_same_shape(tuned, frozen, "consistency_reg");
  const std::size_t n = tuned.rows();
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 1.0 - numerics::cosine_similarity(tuned.row(i), frozen.row(i));
  }
  return acc * (1.0 / static_cast<double>(n));
}

NodeId consistency_reg(numerics::ValueGraph& graph, const numerics::NodeTensor& tuned,
                       const numerics::Tensor& frozen) {
  if (tuned.shape != frozen.shape()) throw ShapeError("consistency_reg: shapes differ");
  const std::size_t n = tuned.rows();
  if (n == 0) return graph.constant(0.0);
  std::vector<NodeId> terms(n);
  std::vector<NodeId> anchor(frozen.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < anchor.size(); ++k) anchor[k] = graph.constant(frozen.at(i, k));
    terms[i] = graph.shift(graph.neg(numerics::cosine_similarity(graph, tuned.row(i), anchor)), 1.0);
  }
  return graph.scale(graph.sum(terms), 1.0 / static_cast<double>(n));
}

}  // namespace sdat::core
