#pragma once

#include <span>
#include <string>

#include "sdat/numerics/tensor.hpp"

namespace sdat::pipeline {

// Scatter plot of 2D points coloured by label, fixed [-5, 5] x [-3, 3] frame.
std::string scatter_svg(const numerics::Tensor& points, std::span<const std::size_t> labels,
                        const std::string& title);

}  // namespace sdat::pipeline
