#include "sdat/numerics/adam.hpp"

#include <cmath>

#include "sdat/errors.hpp"

namespace sdat::numerics {

namespace {

void require_mirror(const MlpParams& a, const MlpParams& b, const char* what) {
  if (a.layers.size() != b.layers.size()) throw ShapeError(std::string(what) + ": layer count");
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    require_same_shape(a.layers[l].weight, b.layers[l].weight, what);
    require_same_shape(a.layers[l].bias, b.layers[l].bias, what);
  }
}

void update(std::span<double> p, std::span<const double> g, std::span<double> m,
            std::span<double> v, const AdamState& s, double lr, double c1, double c2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

}  // namespace

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState state;
  state.first_moment = MlpParams::zeros_like(params);
  state.second_moment = MlpParams::zeros_like(params);
  return state;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw ArgumentError("adam_step: learning rate must be positive");
  require_mirror(params, grads, "adam_step gradients");
  require_mirror(params, state.first_moment, "adam_step first moment");
  require_mirror(params, state.second_moment, "adam_step second moment");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    update(layer.weight.values(), grads.layers[l].weight.values(),
           state.first_moment.layers[l].weight.values(),
           state.second_moment.layers[l].weight.values(), state, lr, c1, c2);
    update(layer.bias.values(), grads.layers[l].bias.values(),
           state.first_moment.layers[l].bias.values(),
           state.second_moment.layers[l].bias.values(), state, lr, c1, c2);
  }
}

}  // namespace sdat::numerics
