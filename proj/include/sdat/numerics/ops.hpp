#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdat/numerics/tensor.hpp"
#include "sdat/numerics/value_graph.hpp"

namespace sdat::numerics {

inline constexpr double kProbabilityFloor = 1e-12;

// Each loss below comes in a plain form and a graph form. Both evaluate the
// same operations in the same order, so their values agree bit for bit.

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);
NodeTensor softmax_rows(ValueGraph& graph, const NodeTensor& logits);

// -log(max(p[label], 1e-12)).
double cross_entropy(std::span<const double> p, std::size_t label);
NodeId cross_entropy(ValueGraph& graph, std::span<const NodeId> p, std::size_t label);

// Throws DegenerateInputError on a zero-norm argument.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
NodeId cosine_similarity(ValueGraph& graph, std::span<const NodeId> a,
                         std::span<const NodeId> b);

// Biased (V-statistic) squared MMD with k(x, y) = exp(-|x - y|^2 / (2 h^2)).
// Rows are samples.
double mmd_rbf(const Tensor& x, const Tensor& y, double bandwidth);
// Differentiable in `x`; `y` is a fixed reference sample.
NodeId mmd_rbf(ValueGraph& graph, const NodeTensor& x, const Tensor& y,
               double bandwidth);

// Median of pairwise Euclidean distances between distinct rows.
double median_pairwise_distance(const Tensor& points);

}  // namespace sdat::numerics
