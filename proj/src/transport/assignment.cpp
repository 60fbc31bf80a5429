#include "sdat/transport/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sdat/errors.hpp"

namespace sdat::transport {

namespace {

void require_solvable(const CostMatrix& c) {
  if (c.rows() != c.cols()) {
    throw ArgumentError("assignment needs a square cost matrix, got " +
                        std::to_string(c.rows()) + "x" + std::to_string(c.cols()));
  }
  for (double v : c.entries()) {
    if (!std::isfinite(v)) throw ArgumentError("assignment cost matrix has a non-finite entry");
  }
}

struct Potentials {
  std::vector<double> row;
  std::vector<double> col;
  std::vector<std::size_t> row_to_col;
};

// Shortest augmenting path Hungarian method with row and column potentials.
// On return, C[i][j] - row[i] - col[j] >= 0 for all (i, j), with equality on
// the matched pairs.
Potentials hungarian(const CostMatrix& c) {
  const std::size_t n = c.n();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // Index 0 of the column arrays is a virtual column; real column j is j + 1.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> owner(n + 1, kNone), way(n + 1, 0);
  std::vector<double> min_slack(n + 1);
  std::vector<char> used(n + 1);

  for (std::size_t i = 0; i < n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double slack = c(i0, j - 1) - u[i0 + 1] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j] + 1] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != kNone);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Potentials out;
  out.row.assign(u.begin() + 1, u.end());
  out.col.assign(v.begin() + 1, v.end());
  out.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[owner[j]] = j - 1;
  return out;
}

// Rewrites a perfect matching on the equality subgraph into the
// lexicographically smallest one. Rows are fixed in order; row i takes the
// smallest tight column j for which the rows after i can still be matched.
class LexicographicRepair {
 public:
  LexicographicRepair(const CostMatrix& c, const Potentials& pot)
      : n_(c.n()), tight_(n_ * n_), row_to_col_(pot.row_to_col), col_to_row_(n_) {
    double scale = 1.0;
    for (double v : c.entries()) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * scale;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        tight_[i * n_ + j] = c(i, j) - pot.row[i] - pot.col[j] <= tol;
      }
      // Matched pairs are tight by construction; keep them so even when
      // rounding in the potentials nudges them over the tolerance.
      tight_[i * n_ + row_to_col_[i]] = true;
      col_to_row_[row_to_col_[i]] = i;
    }
  }

  std::vector<std::size_t> run() {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < row_to_col_[i]; ++j) {
        if (tight_[i * n_ + j] && col_to_row_[j] > i && reroute(i, j)) break;
      }
    }
    return row_to_col_;
  }

 private:
  // Moves row i onto column j. The row that owned j must find an alternating
  // path, through rows after i only, to the column i releases.
  bool reroute(std::size_t i, std::size_t j) {
    const std::size_t released = row_to_col_[i];
    const std::size_t start = col_to_row_[j];
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> came_from(n_, kNone);  // per column: row that reached it
    std::vector<char> seen_row(n_, 0);
    std::vector<std::size_t> queue{start};
    seen_row[start] = 1;
    std::size_t found = kNone;
    for (std::size_t head = 0; head < queue.size() && found == kNone; ++head) {
      const std::size_t r = queue[head];
      for (std::size_t col = 0; col < n_; ++col) {
        if (!tight_[r * n_ + col] || col == j || came_from[col] != kNone) continue;
        const std::size_t holder = col_to_row_[col];
        if (col != released && holder <= i) continue;
        came_from[col] = r;
        if (col == released) {
          found = col;
          break;
        }
        if (!seen_row[holder]) {
          seen_row[holder] = 1;
          queue.push_back(holder);
        }
      }
    }
    if (found == kNone) return false;

    // Flip the path back from the released column to `start`.
    std::size_t col = found;
    while (true) {
      const std::size_t r = came_from[col];
      const std::size_t prev = row_to_col_[r];
      row_to_col_[r] = col;
      col_to_row_[col] = r;
      if (r == start) break;
      col = prev;
    }
    row_to_col_[i] = j;
    col_to_row_[j] = i;
    return true;
  }

  std::size_t n_;
  std::vector<char> tight_;
  std::vector<std::size_t> row_to_col_;
  std::vector<std::size_t> col_to_row_;
};

}  // namespace

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) {
    throw ShapeError("cost matrix entry count does not match its dimensions");
  }
}

CostMatrix l1_cost_matrix(const numerics::ProbBatch& p, const numerics::ProbBatch& u) {
  if (p.n() != u.n()) {
    throw ArgumentError("l1_cost_matrix: batch sizes differ (" + std::to_string(p.n()) +
                        " vs " + std::to_string(u.n()) + ")");
  }
  if (p.k() != u.k()) throw ArgumentError("l1_cost_matrix: subgroup counts differ");
  const std::size_t n = p.n();
  std::vector<double> entries(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    auto pi = p.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      auto uj = u.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < pi.size(); ++k) acc += std::abs(pi[k] - uj[k]);
      entries[i * n + j] = acc;
    }
  }
  return CostMatrix::square(n, std::move(entries));
}

double assignment_cost(const CostMatrix& c, std::span<const std::size_t> sigma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) acc += c(i, sigma[i]);
  return acc;
}

std::vector<std::size_t> identity_permutation(std::size_t n) {
  std::vector<std::size_t> sigma(n);
  std::iota(sigma.begin(), sigma.end(), std::size_t{0});
  return sigma;
}

bool is_permutation(std::span<const std::size_t> sigma) {
  std::vector<char> hit(sigma.size(), 0);
  for (std::size_t s : sigma) {
    if (s >= sigma.size() || hit[s]) return false;
    hit[s] = 1;
  }
  return true;
}

Assignment solve_assignment(const CostMatrix& c) {
  require_solvable(c);
  if (c.n() == 0) return {};
  const Potentials pot = hungarian(c);
  Assignment best{pot.row_to_col, assignment_cost(c, pot.row_to_col)};

  Assignment lex;
  lex.sigma = LexicographicRepair(c, pot).run();
  lex.cost = assignment_cost(c, lex.sigma);
  // The equality subgraph uses a small tolerance; never trade optimality for
  // the tie-break.
  return lex.cost <= best.cost ? lex : best;
}

Assignment solve_assignment_bruteforce(const CostMatrix& c) {
  require_solvable(c);
  if (c.n() > kBruteForceLimit) {
    throw SizeError("brute-force assignment refuses n=" + std::to_string(c.n()) +
                    " (limit " + std::to_string(kBruteForceLimit) + ")");
  }
  std::vector<std::size_t> sigma = identity_permutation(c.n());
  Assignment best{sigma, assignment_cost(c, sigma)};
  while (std::next_permutation(sigma.begin(), sigma.end())) {
    const double cost = assignment_cost(c, sigma);
    if (cost < best.cost) best = {sigma, cost};
  }
  return best;
}

}  // namespace sdat::transport
