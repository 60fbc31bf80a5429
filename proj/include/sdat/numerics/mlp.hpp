#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdat/numerics/rng.hpp"
#include "sdat/numerics/tensor.hpp"
#include "sdat/numerics/value_graph.hpp"

namespace sdat::numerics {

// One fully connected layer. weight is [out, in] so each output unit reads a
// contiguous row.
struct DenseLayer {
  Tensor weight;
  Tensor bias;

  std::size_t in_width() const { return weight.cols(); }
  std::size_t out_width() const { return weight.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

// Multilayer perceptron: tanh on hidden layers, identity on the output.
struct MlpParams {
  std::vector<DenseLayer> layers;

  // widths = {in, hidden..., out}. Weights ~ N(0, 1/fan_in), biases zero.
  static MlpParams init(std::span<const std::size_t> widths, Rng& rng);
  static MlpParams zeros(std::span<const std::size_t> widths);
  static MlpParams zeros_like(const MlpParams& other);

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::vector<std::size_t> widths() const;
  std::size_t parameter_count() const;

  // Throws ShapeError when consecutive layers do not chain.
  void validate() const;

  // Flat views over all parameters in layer order (weight then bias).
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);

  bool operator==(const MlpParams&) const = default;
};

// Plain forward pass for one input row.
std::vector<double> mlp_apply(const MlpParams& params, std::span<const double> input);
// Plain forward pass for each row of a [n, in] matrix.
Tensor mlp_apply(const MlpParams& params, const Tensor& inputs);

// Parameters registered as graph variables.
struct BoundMlp {
  const MlpParams* params = nullptr;
  std::vector<NodeTensor> weights;
  std::vector<NodeTensor> biases;
};

BoundMlp bind(ValueGraph& graph, const MlpParams& params);

// Differentiable in both the bound parameters and the input nodes.
NodeTensor mlp_forward(ValueGraph& graph, const BoundMlp& bound, const NodeTensor& input);
// Parameters enter as constants; differentiable in the input only.
NodeTensor mlp_forward(ValueGraph& graph, const MlpParams& frozen, const NodeTensor& input);

// Gradient of the graph output with respect to each bound parameter.
MlpParams gradients(const BoundMlp& bound, const Adjoints& adjoints);

}  // namespace sdat::numerics

namespace sdat::numerics {

// FNV-1a over the IEEE-754 bit patterns of all parameters, in layer order.
std::uint64_t parameter_digest(const MlpParams& params);

// Network whose parameters cannot change after construction.
class FrozenNetwork {
 public:
  FrozenNetwork() = default;
  explicit FrozenNetwork(MlpParams params)
      : params_(std::move(params)), digest_(parameter_digest(params_)) {
    params_.validate();
  }

  const MlpParams& params() const { return params_; }
  // Digest taken at construction.
  std::uint64_t digest() const { return digest_; }
  bool intact() const { return parameter_digest(params_) == digest_; }

 private:
  MlpParams params_;
  std::uint64_t digest_ = 0;
};

}  // namespace sdat::numerics
