#include "sdat/core/pseudo_labels.hpp"

#include <algorithm>

#include "sdat/errors.hpp"

namespace sdat::core {

ConfidenceSource parse_confidence_source(const std::string& name) {
  if (name == "target") return ConfidenceSource::kTarget;
  if (name == "generated") return ConfidenceSource::kGenerated;
  throw ArgumentError("unknown confidence_source '" + name +
                      "' (expected target or generated)");
}

std::string to_string(ConfidenceSource source) {
  return source == ConfidenceSource::kTarget ? "target" : "generated";
}

PseudoLabelBatch pseudo_labels(const numerics::ProbBatch& p,
                               std::span<const numerics::ProbBatch> targets,
                               ConfidenceSource source) {
  if (targets.empty()) throw ArgumentError("pseudo_labels: no target batches");
  const std::size_t n = p.n();
  const std::size_t k = p.k();
  numerics::Tensor q({n, k});
  PseudoLabelBatch out;
  out.matches.reserve(targets.size());
  for (const auto& u : targets) {
    if (u.n() != n || u.k() != k) {
      throw ArgumentError("pseudo_labels: target batch shape differs from generated batch");
    }
    auto match = transport::solve_assignment(transport::l1_cost_matrix(p, u));
    for (std::size_t i = 0; i < n; ++i) {
      auto src = u.row(match.sigma[i]);
      auto dst = q.row(i);
      for (std::size_t c = 0; c < k; ++c) dst[c] += src[c];
    }
    out.matches.push_back(std::move(match));
  }
  const double m = static_cast<double>(targets.size());
  for (double& v : q.values()) v /= m;

  out.y.resize(n);
  out.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.y[i] = numerics::argmax(q.row(i));
    out.c[i] = source == ConfidenceSource::kTarget
                   ? q.at(i, out.y[i])
                   : *std::max_element(p.row(i).begin(), p.row(i).end());
  }
  out.q = numerics::ProbBatch(std::move(q));
  return out;
}

}  // namespace sdat::core
