#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdat/numerics/tensor.hpp"

namespace sdat::numerics {

// n histograms over K subgroups, one per row, each on the probability simplex.
class ProbBatch {
 public:
  ProbBatch() = default;
  // Throws ArgumentError naming the offending rows when a row is off the
  // simplex by more than `tolerance`.
  explicit ProbBatch(Tensor rows, double tolerance = 1e-9);

  static ProbBatch from_rows(const std::vector<std::vector<double>>& rows,
                             double tolerance = 1e-9);

  std::size_t n() const { return rows_.rank() == 2 ? rows_.rows() : 0; }
  std::size_t k() const { return rows_.rank() == 2 ? rows_.cols() : 0; }
  std::span<const double> row(std::size_t i) const { return rows_.row(i); }
  const Tensor& tensor() const { return rows_; }

 private:
  Tensor rows_;
};

// Indices of rows that have a negative/non-finite entry or do not sum to one
// within `tolerance`.
std::vector<std::size_t> off_simplex_rows(const Tensor& rows, double tolerance);

// First index of the largest entry.
std::size_t argmax(std::span<const double> values);

}  // namespace sdat::numerics
