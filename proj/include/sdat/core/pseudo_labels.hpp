#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdat/numerics/prob_batch.hpp"
#include "sdat/transport/assignment.hpp"

namespace sdat::core {

// Where the gate confidence c_i is read from.
enum class ConfidenceSource {
  kTarget,     // max_k q_i^k, the matched target histogram
  kGenerated,  // max_k p_i^k, the generator-side prediction
};

ConfidenceSource parse_confidence_source(const std::string& name);
std::string to_string(ConfidenceSource source);

// Matched target histograms and the labels derived from them. Every field
// is a constant for the optimisation step that built it.
struct PseudoLabelBatch {
  numerics::ProbBatch q;
  std::vector<std::size_t> y;   // argmax_k q_i^k, lowest index on ties
  std::vector<double> c;        // gate confidence per sample
  std::vector<transport::Assignment> matches;  // one optimal matching per target batch
};

// For each target batch U_m, matches P to U_m by minimum total L1 cost and
// averages the matched rows: q_i = (1/M) sum_m U_m[sigma_m(i)].
PseudoLabelBatch pseudo_labels(const numerics::ProbBatch& p,
                               std::span<const numerics::ProbBatch> targets,
                               ConfidenceSource source = ConfidenceSource::kTarget);

}  // namespace sdat::core
