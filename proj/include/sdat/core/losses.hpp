#pragma once

#include <cstddef>

#include "sdat/core/pseudo_labels.hpp"
#include "sdat/numerics/prob_batch.hpp"
#include "sdat/numerics/tensor.hpp"
#include "sdat/numerics/value_graph.hpp"

namespace sdat::core {

// Number of samples with c_i >= tau.
std::size_t gate_count(const PseudoLabelBatch& labels, double tau);

// (1/N) sum_i [c_i >= tau] CE(p_i, y_i). Divides by the batch size, not by
// the number of samples passing the gate; a fully gated batch gives exactly 0.
double alignment_loss(const numerics::ProbBatch& p, const PseudoLabelBatch& labels,
                      double tau);
// Graph form; `p` is an [N, K] tensor of softmax nodes. Gated samples are
// left off the graph entirely.
numerics::NodeId alignment_loss(numerics::ValueGraph& graph, const numerics::NodeTensor& p,
                                const PseudoLabelBatch& labels, double tau);

// (1/N) sum_i [1 - cos(tuned_i, frozen_i)], rows are embeddings. Throws
// DegenerateInputError on a zero-norm row.
double consistency_reg(const numerics::Tensor& tuned, const numerics::Tensor& frozen);
// Graph form; differentiable in the tuned embeddings only.
numerics::NodeId consistency_reg(numerics::ValueGraph& graph, const numerics::NodeTensor& tuned,
                                 const numerics::Tensor& frozen);

}  // namespace sdat::core
