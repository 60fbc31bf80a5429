#include "sdat/numerics/value_graph.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sdat/errors.hpp"

namespace sdat::numerics {

NodeId ValueGraph::push(OpKind op, double value, std::uint32_t a, std::uint32_t b,
                        double aux, std::uint32_t extra) {
  if (nodes_.size() >= std::numeric_limits<NodeId>::max()) {
    throw SizeError("value graph exceeds node capacity");
  }
  nodes_.push_back(Node{value, aux, a, b, extra, op});
  return static_cast<NodeId>(nodes_.size() - 1);
}

void ValueGraph::check(NodeId id) const {
  if (id >= nodes_.size()) {
    throw ArgumentError("node id " + std::to_string(id) + " not on graph");
  }
}

NodeId ValueGraph::constant(double v) { return push(OpKind::kConstant, v); }
NodeId ValueGraph::variable(double v) { return push(OpKind::kVariable, v); }

NodeId ValueGraph::add(NodeId a, NodeId b) {
  check(a), check(b);
  return push(OpKind::kAdd, nodes_[a].value + nodes_[b].value, a, b);
}

NodeId ValueGraph::sub(NodeId a, NodeId b) {
  check(a), check(b);
  return push(OpKind::kSub, nodes_[a].value - nodes_[b].value, a, b);
}

NodeId ValueGraph::mul(NodeId a, NodeId b) {
  check(a), check(b);
  return push(OpKind::kMul, nodes_[a].value * nodes_[b].value, a, b);
}

NodeId ValueGraph::div(NodeId a, NodeId b) {
  check(a), check(b);
  return push(OpKind::kDiv, nodes_[a].value / nodes_[b].value, a, b);
}

NodeId ValueGraph::neg(NodeId a) {
  check(a);
  return push(OpKind::kNeg, -nodes_[a].value, a);
}

NodeId ValueGraph::scale(NodeId a, double c) {
  check(a);
  return push(OpKind::kScale, nodes_[a].value * c, a, 0, c);
}

NodeId ValueGraph::shift(NodeId a, double c) {
  check(a);
  return push(OpKind::kShift, nodes_[a].value + c, a, 0, c);
}

NodeId ValueGraph::tanh(NodeId a) {
  check(a);
  return push(OpKind::kTanh, std::tanh(nodes_[a].value), a);
}

NodeId ValueGraph::exp(NodeId a) {
  check(a);
  return push(OpKind::kExp, std::exp(nodes_[a].value), a);
}

NodeId ValueGraph::log_floor(NodeId a, double floor) {
  check(a);
  const double x = nodes_[a].value;
  return push(OpKind::kLogFloor, std::log(x < floor ? floor : x), a, 0, floor);
}

NodeId ValueGraph::sqrt(NodeId a) {
  check(a);
  return push(OpKind::kSqrt, std::sqrt(nodes_[a].value), a);
}

NodeId ValueGraph::sum(std::span<const NodeId> terms) {
  const auto offset = static_cast<std::uint32_t>(operands_.size());
  double acc = 0.0;
  for (NodeId t : terms) {
    check(t);
    acc += nodes_[t].value;
    operands_.push_back(t);
  }
  return push(OpKind::kSum, acc, offset, static_cast<std::uint32_t>(terms.size()));
}

NodeId ValueGraph::dot(std::span<const NodeId> a, std::span<const NodeId> b) {
  if (a.size() != b.size()) throw ShapeError("dot: operand lengths differ");
  const auto offset = static_cast<std::uint32_t>(operands_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    check(a[k]), check(b[k]);
    acc += nodes_[a[k]].value * nodes_[b[k]].value;
  }
  operands_.insert(operands_.end(), a.begin(), a.end());
  operands_.insert(operands_.end(), b.begin(), b.end());
  return push(OpKind::kDot, acc, offset, static_cast<std::uint32_t>(a.size()));
}

NodeId ValueGraph::affine(std::span<const double> weights,
                          std::span<const NodeId> inputs, double bias) {
  if (weights.size() != inputs.size()) throw ShapeError("affine: operand lengths differ");
  const auto offset = static_cast<std::uint32_t>(operands_.size());
  const auto woffset = static_cast<std::uint32_t>(weights_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    check(inputs[k]);
    acc += weights[k] * nodes_[inputs[k]].value;
  }
  acc += bias;
  operands_.insert(operands_.end(), inputs.begin(), inputs.end());
  weights_.insert(weights_.end(), weights.begin(), weights.end());
  return push(OpKind::kAffine, acc, offset, static_cast<std::uint32_t>(inputs.size()),
              bias, woffset);
}

void ValueGraph::clear() {
  nodes_.clear();
  operands_.clear();
  weights_.clear();
}

void ValueGraph::reserve(std::size_t nodes, std::size_t operands) {
  nodes_.reserve(nodes);
  operands_.reserve(operands);
}

Adjoints ValueGraph::backward(NodeId output) const {
  check(output);
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[output] = 1.0;
  for (std::size_t idx = output + 1; idx-- > 0;) {
    const double g = adj[idx];
    if (g == 0.0) continue;
    const Node& n = nodes_[idx];
    switch (n.op) {
      case OpKind::kConstant:
      case OpKind::kVariable:
        break;
      case OpKind::kAdd:
        adj[n.a] += g;
        adj[n.b] += g;
        break;
      case OpKind::kSub:
        adj[n.a] += g;
        adj[n.b] -= g;
        break;
      case OpKind::kMul:
        adj[n.a] += g * nodes_[n.b].value;
        adj[n.b] += g * nodes_[n.a].value;
        break;
      case OpKind::kDiv: {
        const double denom = nodes_[n.b].value;
        adj[n.a] += g / denom;
        adj[n.b] -= g * n.value / denom;
        break;
      }
      case OpKind::kNeg:
        adj[n.a] -= g;
        break;
      case OpKind::kScale:
        adj[n.a] += g * n.aux;
        break;
      case OpKind::kShift:
        adj[n.a] += g;
        break;
      case OpKind::kTanh:
        adj[n.a] += g * (1.0 - n.value * n.value);
        break;
      case OpKind::kExp:
        adj[n.a] += g * n.value;
        break;
      case OpKind::kLogFloor: {
        const double x = nodes_[n.a].value;
        if (x >= n.aux) adj[n.a] += g / x;
        break;
      }
      case OpKind::kSqrt:
        adj[n.a] += g * 0.5 / n.value;
        break;
      case OpKind::kSum:
        for (std::uint32_t k = 0; k < n.b; ++k) adj[operands_[n.a + k]] += g;
        break;
      case OpKind::kDot: {
        const NodeId* lhs = operands_.data() + n.a;
        const NodeId* rhs = lhs + n.b;
        for (std::uint32_t k = 0; k < n.b; ++k) {
          adj[lhs[k]] += g * nodes_[rhs[k]].value;
          adj[rhs[k]] += g * nodes_[lhs[k]].value;
        }
        break;
      }
      case OpKind::kAffine: {
        const NodeId* in = operands_.data() + n.a;
        const double* w = weights_.data() + n.extra;
        for (std::uint32_t k = 0; k < n.b; ++k) adj[in[k]] += g * w[k];
        break;
      }
    }
  }
  return Adjoints(std::move(adj));
}

std::size_t NodeTensor::rows() const {
  if (shape.size() != 2) throw ShapeError("node tensor is not a matrix");
  return shape[0];
}

std::size_t NodeTensor::cols() const {
  if (shape.size() != 2) throw ShapeError("node tensor is not a matrix");
  return shape[1];
}

std::span<const NodeId> NodeTensor::row(std::size_t r) const {
  const std::size_t width = cols();
  return std::span<const NodeId>(ids).subspan(r * width, width);
}

NodeTensor constants(ValueGraph& graph, const Tensor& t) {
  NodeTensor out{t.shape(), {}};
  out.ids.reserve(t.size());
  for (double v : t.values()) out.ids.push_back(graph.constant(v));
  return out;
}

NodeTensor variables(ValueGraph& graph, const Tensor& t) {
  NodeTensor out{t.shape(), {}};
  out.ids.reserve(t.size());
  for (double v : t.values()) out.ids.push_back(graph.variable(v));
  return out;
}

Tensor values(const ValueGraph& graph, const NodeTensor& t) {
  std::vector<double> data;
  data.reserve(t.size());
  for (NodeId id : t.ids) data.push_back(graph.value(id));
  return Tensor(t.shape, std::move(data));
}

Adjoints backward(const ValueGraph& graph, const NodeTensor& output) {
  if (output.size() != 1) {
    throw ArgumentError("backward needs a scalar output, got shape " +
                        shape_string(output.shape));
  }
  return graph.backward(output.ids.front());
}

Tensor gradient_of(const Adjoints& adjoints, const NodeTensor& t) {
  std::vector<double> data;
  data.reserve(t.size());
  for (NodeId id : t.ids) data.push_back(adjoints[id]);
  return Tensor(t.shape, std::move(data));
}

}  // namespace sdat::numerics
