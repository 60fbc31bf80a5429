#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "sdat/numerics/rng.hpp"
#include "sdat/numerics/tensor.hpp"

namespace sdat::testbed {

// Isotropic Gaussian mixture in the plane; mode k is subgroup k.
struct PopulationSpec {
  std::vector<std::array<double, 2>> means{{-2.0, 0.0}, {2.0, 0.0}};
  double stddev = 0.5;
  std::vector<double> weights{0.5, 0.5};

  static PopulationSpec two_mode(std::vector<double> weights);

  std::size_t k() const { return means.size(); }
  // Weights on the simplex, one per mode, modes at least 6 std apart.
  void validate() const;
};

struct TargetDataset {
  numerics::Tensor samples;          // [n, 2]
  std::vector<std::size_t> labels;   // generating mode of each sample
  std::vector<double> declared_weights;

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> label_counts() const;
};

// Largest-remainder rounding of n * w_k; ties go to the lower index.
std::vector<std::size_t> stratified_counts(std::span<const double> weights, std::size_t n);

// Exactly stratified_counts(weights, n)[k] points from mode k, in shuffled order.
TargetDataset sample_population(const PopulationSpec& spec, std::size_t n,
                                numerics::Rng& rng);

// Throws ArgumentError unless weights are finite, nonnegative and sum to one.
void require_simplex(std::span<const double> weights, const char* what);

}  // namespace sdat::testbed
