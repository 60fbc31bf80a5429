#include "sdat/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdat/errors.hpp"

namespace sdat::numerics {

namespace {

void check_label(std::size_t label, std::size_t k) {
  if (label >= k) {
    throw ArgumentError("class index " + std::to_string(label) + " out of range for K=" +
                        std::to_string(k));
  }
}

void check_mmd_inputs(std::size_t n, std::size_t m, std::size_t dx, std::size_t dy,
                      double bandwidth) {
  if (!(bandwidth > 0.0)) throw ArgumentError("mmd_rbf: bandwidth must be positive");
  if (n == 0 || m == 0) throw ShapeError("mmd_rbf: empty sample batch");
  if (dx != dy) throw ShapeError("mmd_rbf: sample dimensionality differs");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

// Mean kernel value within one sample, using k(x, x) = 1 on the diagonal.
double self_kernel_mean(const Tensor& x, double gamma) {
  const std::size_t n = x.rows();
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      off += std::exp(squared_distance(x.row(i), x.row(j)) * gamma);
    }
  }
  const double nn = static_cast<double>(n);
  return (2.0 * off + nn) * (1.0 / (nn * nn));
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax of an empty row");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

NodeTensor softmax_rows(ValueGraph& graph, const NodeTensor& logits) {
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  NodeTensor out{logits.shape, {}};
  out.ids.reserve(logits.size());
  std::vector<NodeId> exps(k);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    double top = graph.value(row[0]);
    for (NodeId id : row) top = std::max(top, graph.value(id));
    // The shift is a constant: softmax is invariant to it, so the gradient
    // is exact without differentiating through the max.
    for (std::size_t c = 0; c < k; ++c) exps[c] = graph.exp(graph.shift(row[c], -top));
    const NodeId total = graph.sum(exps);
    for (std::size_t c = 0; c < k; ++c) out.ids.push_back(graph.div(exps[c], total));
  }
  return out;
}

double cross_entropy(std::span<const double> p, std::size_t label) {
  check_label(label, p.size());
  return -std::log(std::max(p[label], kProbabilityFloor));
}

NodeId cross_entropy(ValueGraph& graph, std::span<const NodeId> p, std::size_t label) {
  check_label(label, p.size());
  return graph.neg(graph.log_floor(p[label], kProbabilityFloor));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: lengths differ");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa == 0.0 || bb == 0.0) {
    throw DegenerateInputError("cosine_similarity: zero-norm vector");
  }
  // sqrt(aa * bb) rather than sqrt(aa) * sqrt(bb): for a == b it returns aa
  // exactly, so identical vectors give exactly 1.
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

NodeId cosine_similarity(ValueGraph& graph, std::span<const NodeId> a,
                         std::span<const NodeId> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: lengths differ");
  const NodeId ab = graph.dot(a, b);
  const NodeId aa = graph.dot(a, a);
  const NodeId bb = graph.dot(b, b);
  if (graph.value(aa) == 0.0 || graph.value(bb) == 0.0) {
    throw DegenerateInputError("cosine_similarity: zero-norm vector");
  }
  return graph.div(ab, graph.sqrt(graph.mul(aa, bb)));
}

double mmd_rbf(const Tensor& x, const Tensor& y, double bandwidth) {
  check_mmd_inputs(x.rows(), y.rows(), x.cols(), y.cols(), bandwidth);
  const double gamma = -1.0 / (2.0 * bandwidth * bandwidth);
  const double xx = self_kernel_mean(x, gamma);
  const double yy = self_kernel_mean(y, gamma);
  double cross = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.rows(); ++j) {
      cross += std::exp(squared_distance(x.row(i), y.row(j)) * gamma);
    }
  }
  const double xy =
      cross * (1.0 / (static_cast<double>(x.rows()) * static_cast<double>(y.rows())));
  return xx + yy - 2.0 * xy;
}

NodeId mmd_rbf(ValueGraph& graph, const NodeTensor& x, const Tensor& y,
               double bandwidth) {
  check_mmd_inputs(x.rows(), y.rows(), x.cols(), y.cols(), bandwidth);
  const std::size_t n = x.rows();
  const std::size_t m = y.rows();
  const std::size_t d = x.cols();
  const double gamma = -1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<NodeId> diff(d);

  std::vector<NodeId> self_terms;
  self_terms.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) diff[k] = graph.sub(x.row(i)[k], x.row(j)[k]);
      self_terms.push_back(graph.exp(graph.scale(graph.dot(diff, diff), gamma)));
    }
  }
  const double nn = static_cast<double>(n);
  const NodeId xx = graph.scale(
      graph.shift(graph.scale(graph.sum(self_terms), 2.0), nn), 1.0 / (nn * nn));

  std::vector<NodeId> cross_terms;
  cross_terms.reserve(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < d; ++k) diff[k] = graph.shift(x.row(i)[k], -y.at(j, k));
      cross_terms.push_back(graph.exp(graph.scale(graph.dot(diff, diff), gamma)));
    }
  }
  const NodeId xy = graph.scale(graph.sum(cross_terms),
                                1.0 / (nn * static_cast<double>(m)));
  const double yy = self_kernel_mean(y, gamma);
  return graph.sub(graph.shift(xx, yy), graph.scale(xy, 2.0));
}

double median_pairwise_distance(const Tensor& points) {
  const std::size_t n = points.rows();
  if (n < 2) throw ArgumentError("median_pairwise_distance needs at least two points");
  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist.push_back(std::sqrt(squared_distance(points.row(i), points.row(j))));
    }
  }
  // Lower median, so the result is always one of the observed distances.
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>((dist.size() - 1) / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid;
}

}  // namespace sdat::numerics
