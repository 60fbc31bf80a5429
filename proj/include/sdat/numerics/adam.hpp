#pragma once

#include <cstdint>

#include "sdat/numerics/mlp.hpp"

namespace sdat::numerics {

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

// One bias-corrected Adam update of `params` in place.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr);

}  // namespace sdat::numerics
