#include "sdat/testbed/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sdat/errors.hpp"

namespace sdat::testbed {

PopulationSpec PopulationSpec::two_mode(std::vector<double> weights) {
  PopulationSpec spec;
  spec.weights = std::move(weights);
  spec.validate();
  return spec;
}

void require_simplex(std::span<const double> weights, const char* what) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ArgumentError(std::string(what) + ": weights must be finite and nonnegative");
    }
    total += w;
  }
  if (weights.empty() || std::abs(total - 1.0) > 1e-9) {
    throw ArgumentError(std::string(what) + ": weights must sum to 1");
  }
}

void PopulationSpec::validate() const {
  if (means.size() < 2) throw ArgumentError("population needs at least two modes");
  if (weights.size() != means.size()) {
    throw ArgumentError("population: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(means.size()) + " modes");
  }
  require_simplex(weights, "population");
  if (!(stddev > 0.0)) throw ArgumentError("population: stddev must be positive");
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      const double dx = means[a][0] - means[b][0];
      const double dy = means[a][1] - means[b][1];
      if (std::sqrt(dx * dx + dy * dy) < 6.0 * stddev) {
        throw ArgumentError("population: modes closer than 6 standard deviations");
      }
    }
  }
}

std::vector<std::size_t> TargetDataset::label_counts() const {
  std::vector<std::size_t> counts(declared_weights.size(), 0);
  for (std::size_t y : labels) {
    if (y >= counts.size()) counts.resize(y + 1, 0);
    ++counts[y];
  }
  return counts;
}

std::vector<std::size_t> stratified_counts(std::span<const double> weights, std::size_t n) {
  require_simplex(weights, "stratified_counts");
  const std::size_t k = weights.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = weights[i] * static_cast<double>(n);
    // Guard against exact products landing a hair below an integer.
    double whole = std::floor(exact + 1e-9);
    whole = std::min(whole, static_cast<double>(n));
    counts[i] = static_cast<std::size_t>(whole);
    remainder[i] = exact - whole;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[order[r % k]];
  while (assigned > n) {
    // Only reachable through the rounding guard; take back from the largest.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

TargetDataset sample_population(const PopulationSpec& spec, std::size_t n,
                                numerics::Rng& rng) {
  spec.validate();
  if (n < spec.k()) {
    throw ArgumentError("sample_population: n=" + std::to_string(n) +
                        " is smaller than the number of subgroups");
  }
  const auto counts = stratified_counts(spec.weights, n);
  std::vector<std::size_t> labels;
  labels.reserve(n);
  for (std::size_t k = 0; k < counts.size(); ++k) labels.insert(labels.end(), counts[k], k);
  rng.shuffle(std::span<std::size_t>(labels));

  TargetDataset out;
  out.samples = numerics::Tensor({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& mu = spec.means[labels[i]];
    out.samples.at(i, 0) = mu[0] + spec.stddev * rng.normal();
    out.samples.at(i, 1) = mu[1] + spec.stddev * rng.normal();
  }
  out.labels = std::move(labels);
  out.declared_weights = spec.weights;
  return out;
}

}  // namespace sdat::testbed
