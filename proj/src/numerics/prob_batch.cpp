#include "sdat/numerics/prob_batch.hpp"

#include <cmath>
#include <string>

#include "sdat/errors.hpp"

namespace sdat::numerics {

std::vector<std::size_t> off_simplex_rows(const Tensor& rows, double tolerance) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double total = 0.0;
    bool ok = true;
    for (double v : rows.row(i)) {
      if (!std::isfinite(v) || v < -tolerance) ok = false;
      total += v;
    }
    if (!ok || std::abs(total - 1.0) > tolerance) bad.push_back(i);
  }
  return bad;
}

ProbBatch::ProbBatch(Tensor rows, double tolerance) : rows_(std::move(rows)) {
  if (rows_.rank() != 2) throw ShapeError("ProbBatch needs a matrix of rows");
  if (rows_.cols() == 0) throw ShapeError("ProbBatch needs K >= 1");
  const auto bad = off_simplex_rows(rows_, tolerance);
  if (!bad.empty()) {
    std::string list;
    for (std::size_t i = 0; i < bad.size() && i < 16; ++i) {
      if (i) list += ",";
      list += std::to_string(bad[i]);
    }
    if (bad.size() > 16) list += ",...";
    throw ArgumentError("rows off the probability simplex: " + list);
  }
}

ProbBatch ProbBatch::from_rows(const std::vector<std::vector<double>>& rows,
                               double tolerance) {
  const std::size_t n = rows.size();
  const std::size_t k = n ? rows.front().size() : 0;
  std::vector<double> flat;
  flat.reserve(n * k);
  for (const auto& r : rows) {
    if (r.size() != k) throw ShapeError("ProbBatch rows have differing lengths");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return ProbBatch(Tensor({n, k}, std::move(flat)), tolerance);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

}  // namespace sdat::numerics
