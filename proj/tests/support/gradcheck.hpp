#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace sdat::testing {

inline constexpr double kFiniteDifferenceStep = 1e-5;

// Components below this magnitude are compared on an absolute scale.
inline constexpr double kRelativeFloor = 1e-6;

inline std::vector<double> central_differences(
    const std::function<double(std::span<const double>)>& f, std::vector<double> x,
    double h = kFiniteDifferenceStep) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kRelativeFloor});
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i]));
  return worst;
}

}  // namespace sdat::testing
