#include "sdat/numerics/mlp.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "sdat/errors.hpp"

namespace sdat::numerics {

namespace {

void check_widths(std::span<const std::size_t> widths) {
  if (widths.size() < 2) throw ShapeError("an MLP needs at least input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw ShapeError("MLP layer width must be positive");
  }
}

void check_input(const MlpParams& params, std::size_t width) {
  if (params.layers.empty()) throw ShapeError("MLP has no layers");
  if (width != params.input_width()) {
    throw ShapeError("MLP input width " + std::to_string(width) + " != expected " +
                     std::to_string(params.input_width()));
  }
}

}  // namespace

MlpParams MlpParams::init(std::span<const std::size_t> widths, Rng& rng) {
  check_widths(widths);
  MlpParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Tensor({out, in}), Tensor({out})};
    for (double& w : layer.weight.values()) w = rng.normal() * scale;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

MlpParams MlpParams::zeros(std::span<const std::size_t> widths) {
  check_widths(widths);
  MlpParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    params.layers.push_back({Tensor({widths[l + 1], widths[l]}), Tensor({widths[l + 1]})});
  }
  return params;
}

MlpParams MlpParams::zeros_like(const MlpParams& other) {
  MlpParams params;
  for (const auto& layer : other.layers) {
    params.layers.push_back({Tensor(layer.weight.shape()), Tensor(layer.bias.shape())});
  }
  return params;
}

std::size_t MlpParams::input_width() const {
  return layers.empty() ? 0 : layers.front().in_width();
}

std::size_t MlpParams::output_width() const {
  return layers.empty() ? 0 : layers.back().out_width();
}

std::vector<std::size_t> MlpParams::widths() const {
  std::vector<std::size_t> out;
  if (layers.empty()) return out;
  out.push_back(input_width());
  for (const auto& layer : layers) out.push_back(layer.out_width());
  return out;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("MLP has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rank() != 2 || layer.bias.rank() != 1 ||
        layer.bias.dim(0) != layer.weight.rows()) {
      throw ShapeError("MLP layer " + std::to_string(l) + " has inconsistent shapes");
    }
    if (l > 0 && layers[l - 1].out_width() != layer.in_width()) {
      throw ShapeError("MLP layer " + std::to_string(l) + " does not chain with layer " +
                       std::to_string(l - 1));
    }
  }
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers) {
    flat.insert(flat.end(), layer.weight.values().begin(), layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.values().begin(), layer.bias.values().end());
  }
  return flat;
}

void MlpParams::assign_flat(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("flat parameter length mismatch");
  std::size_t pos = 0;
  for (auto& layer : layers) {
    for (double& w : layer.weight.values()) w = flat[pos++];
    for (double& b : layer.bias.values()) b = flat[pos++];
  }
}

std::vector<double> mlp_apply(const MlpParams& params, std::span<const double> input) {
  check_input(params, input.size());
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const bool hidden = l + 1 < params.layers.size();
    next.assign(layer.out_width(), 0.0);
    for (std::size_t o = 0; o < layer.out_width(); ++o) {
      auto w = layer.weight.row(o);
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * current[k];
      acc += layer.bias[o];
      next[o] = hidden ? std::tanh(acc) : acc;
    }
    current.swap(next);
  }
  return current;
}

Tensor mlp_apply(const MlpParams& params, const Tensor& inputs) {
  check_input(params, inputs.cols());
  const std::size_t n = inputs.rows();
  Tensor out({n, params.output_width()});
  for (std::size_t i = 0; i < n; ++i) {
    auto y = mlp_apply(params, inputs.row(i));
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  return out;
}

BoundMlp bind(ValueGraph& graph, const MlpParams& params) {
  params.validate();
  BoundMlp bound;
  bound.params = &params;
  for (const auto& layer : params.layers) {
    bound.weights.push_back(variables(graph, layer.weight));
    bound.biases.push_back(variables(graph, layer.bias));
  }
  return bound;
}

NodeTensor mlp_forward(ValueGraph& graph, const BoundMlp& bound, const NodeTensor& input) {
  const MlpParams& params = *bound.params;
  check_input(params, input.cols());
  const std::size_t n = input.rows();
  NodeTensor current = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const bool hidden = l + 1 < params.layers.size();
    const std::size_t out_w = params.layers[l].out_width();
    NodeTensor next{{n, out_w}, {}};
    next.ids.reserve(n * out_w);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = current.row(i);
      for (std::size_t o = 0; o < out_w; ++o) {
        NodeId pre = graph.add(graph.dot(bound.weights[l].row(o), x),
                               bound.biases[l].ids[o]);
        next.ids.push_back(hidden ? graph.tanh(pre) : pre);
      }
    }
    current = std::move(next);
  }
  return current;
}

NodeTensor mlp_forward(ValueGraph& graph, const MlpParams& frozen, const NodeTensor& input) {
  check_input(frozen, input.cols());
  const std::size_t n = input.rows();
  NodeTensor current = input;
  for (std::size_t l = 0; l < frozen.layers.size(); ++l) {
    const auto& layer = frozen.layers[l];
    const bool hidden = l + 1 < frozen.layers.size();
    NodeTensor next{{n, layer.out_width()}, {}};
    next.ids.reserve(n * layer.out_width());
    for (std::size_t i = 0; i < n; ++i) {
      auto x = current.row(i);
      for (std::size_t o = 0; o < layer.out_width(); ++o) {
        NodeId pre = graph.affine(layer.weight.row(o), x, layer.bias[o]);
        next.ids.push_back(hidden ? graph.tanh(pre) : pre);
      }
    }
    current = std::move(next);
  }
  return current;
}

MlpParams gradients(const BoundMlp& bound, const Adjoints& adjoints) {
  MlpParams grads;
  for (std::size_t l = 0; l < bound.weights.size(); ++l) {
    grads.layers.push_back(
        {gradient_of(adjoints, bound.weights[l]), gradient_of(adjoints, bound.biases[l])});
  }
  return grads;
}

}  // namespace sdat::numerics

namespace sdat::numerics {

std::uint64_t parameter_digest(const MlpParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& layer : params.layers) {
    for (std::size_t d : layer.weight.shape()) mix(d);
    for (double v : layer.weight.values()) mix(std::bit_cast<std::uint64_t>(v));
    for (double v : layer.bias.values()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

}  // namespace sdat::numerics
