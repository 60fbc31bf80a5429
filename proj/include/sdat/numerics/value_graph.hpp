#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdat/numerics/tensor.hpp"

namespace sdat::numerics {

using NodeId = std::uint32_t;

enum class OpKind : std::uint8_t {
  kConstant,
  kVariable,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kScale,     // a * c
  kShift,     // a + c
  kTanh,
  kExp,
  kLogFloor,  // log(max(a, floor)), zero derivative below the floor
  kSqrt,
  kSum,
  kDot,
  kAffine,    // sum_k w_k * x_k + bias with constant w and bias
};

class Adjoints {
 public:
  explicit Adjoints(std::vector<double> values) : values_(std::move(values)) {}
  double operator[](NodeId id) const { return values_[id]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

// Append-only scalar tape. Every node's inputs precede it, so insertion order
// is a topological order and backward is a single reverse sweep.
//
// N-ary nodes (sum, dot, affine) keep their operand lists in a side array,
// which keeps dense layers at one node per output unit.
class ValueGraph {
 public:
  NodeId constant(double v);
  NodeId variable(double v);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  NodeId scale(NodeId a, double c);
  NodeId shift(NodeId a, double c);
  NodeId tanh(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a) { return log_floor(a, 0.0); }
  NodeId log_floor(NodeId a, double floor);
  NodeId sqrt(NodeId a);
  NodeId square(NodeId a) { return mul(a, a); }

  // Accumulated left to right starting from 0.0.
  NodeId sum(std::span<const NodeId> terms);
  NodeId dot(std::span<const NodeId> a, std::span<const NodeId> b);
  NodeId affine(std::span<const double> weights, std::span<const NodeId> inputs,
                double bias);

  double value(NodeId id) const { return nodes_.at(id).value; }
  OpKind kind(NodeId id) const { return nodes_.at(id).op; }
  std::size_t size() const { return nodes_.size(); }

  void clear();
  void reserve(std::size_t nodes, std::size_t operands);

  // Reverse sweep seeded with d(output)/d(output) = 1. Nodes the output does
  // not depend on keep a zero adjoint.
  Adjoints backward(NodeId output) const;

 private:
  struct Node {
    double value;
    double aux;
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t extra;
    OpKind op;
  };

  NodeId push(OpKind op, double value, std::uint32_t a = 0, std::uint32_t b = 0,
              double aux = 0.0, std::uint32_t extra = 0);
  void check(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> operands_;
  std::vector<double> weights_;
};

// A tensor whose entries are graph nodes.
struct NodeTensor {
  std::vector<std::size_t> shape;
  std::vector<NodeId> ids;

  std::size_t size() const { return ids.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::span<const NodeId> row(std::size_t r) const;
};

NodeTensor constants(ValueGraph& graph, const Tensor& t);
NodeTensor variables(ValueGraph& graph, const Tensor& t);
Tensor values(const ValueGraph& graph, const NodeTensor& t);

// Throws ArgumentError unless `output` holds exactly one node.
Adjoints backward(const ValueGraph& graph, const NodeTensor& output);

// Adjoints of the nodes in `t`, reshaped like it.
Tensor gradient_of(const Adjoints& adjoints, const NodeTensor& t);

}  // namespace sdat::numerics
