#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdat/numerics/prob_batch.hpp"

namespace sdat::transport {

// Dense cost matrix for a balanced assignment problem.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  static CostMatrix square(std::size_t n, std::vector<double> entries) {
    return CostMatrix(n, n, std::move(entries));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t n() const { return rows_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const double> entries() const { return entries_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

// sigma[i] = index of the target row matched to source row i.
struct Assignment {
  std::vector<std::size_t> sigma;
  double cost = 0.0;
};

// entry (i, j) = sum_k |P[i][k] - U[j][k]|.
CostMatrix l1_cost_matrix(const numerics::ProbBatch& p, const numerics::ProbBatch& u);

// Sum of C[i][sigma[i]] accumulated in row order.
double assignment_cost(const CostMatrix& c, std::span<const std::size_t> sigma);

// Exact minimum-cost permutation in O(n^3) worst case for the potentials
// phase. Among optimal permutations, returns the lexicographically smallest.
std::vector<std::size_t> identity_permutation(std::size_t n);
bool is_permutation(std::span<const std::size_t> sigma);

Assignment solve_assignment(const CostMatrix& c);

// Exhaustive search over all n! permutations in lexicographic order. Refuses
// n > kBruteForceLimit.
inline constexpr std::size_t kBruteForceLimit = 9;
Assignment solve_assignment_bruteforce(const CostMatrix& c);

}  // namespace sdat::transport
