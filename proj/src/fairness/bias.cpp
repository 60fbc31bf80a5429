#include "sdat/fairness/bias.hpp"

#include <cmath>

#include "sdat/errors.hpp"
#include "sdat/numerics/ops.hpp"
#include "sdat/testbed/classifier.hpp"

namespace sdat::fairness {

void FrequencyVector::validate() const {
  if (freq.empty()) throw ArgumentError("frequency vector is empty");
  double total = 0.0;
  for (double f : freq) {
    if (!std::isfinite(f) || f < 0.0 || f > 1.0) {
      throw ArgumentError("frequency entries must lie in [0, 1]");
    }
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("frequencies must sum to 1");
}

FrequencyVector estimate_frequencies(const testbed::Generator& generator,
                                     const numerics::MlpParams& classifier,
                                     std::size_t n_samples, numerics::Rng& rng,
                                     CountingMode mode) {
  if (n_samples == 0) throw ArgumentError("estimate_frequencies: n_samples must be >= 1");
  if (classifier.input_width() != generator.params.output_width()) {
    throw ShapeError("classifier input width does not match generator output width");
  }
  const auto batch = testbed::generate_batch(generator, n_samples, rng);
  FrequencyVector out{std::vector<double>(classifier.output_width(), 0.0), n_samples};
  if (mode == CountingMode::kArgmax) {
    for (std::size_t y : testbed::classify(classifier, batch.points)) out.freq[y] += 1.0;
  } else {
    const auto probs = testbed::class_probabilities(classifier, batch.points);
    for (std::size_t i = 0; i < probs.n(); ++i) {
      for (std::size_t k = 0; k < probs.k(); ++k) out.freq[k] += probs.row(i)[k];
    }
  }
  for (double& f : out.freq) f /= static_cast<double>(n_samples);
  return out;
}

double bias_metric(std::span<const double> freq) {
  const std::size_t k = freq.size();
  if (k < 2) throw ArgumentError("bias_metric needs at least two subgroups");
  double gaps = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) gaps += std::abs(freq[i] - freq[j]);
  }
  return gaps / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

double bias_metric(const FrequencyVector& freq) {
  freq.validate();
  return bias_metric(freq.freq);
}

double abs_target_gap(const FrequencyVector& freq, const FrequencyVector& target) {
  if (freq.k() != target.k()) throw ShapeError("frequency and target sizes differ");
  double total = 0.0;
  for (std::size_t k = 0; k < freq.k(); ++k) total += std::abs(freq.freq[k] - target.freq[k]);
  return total / 2.0;
}

BiasReport make_report(FrequencyVector freq, FrequencyVector target) {
  target.validate();
  BiasReport report;
  report.bias = bias_metric(freq);
  report.abs_target_gap = abs_target_gap(freq, target);
  report.freq = std::move(freq);
  report.target_freq = std::move(target);
  return report;
}

BiasReport evaluate(const testbed::Generator& generator,
                    const numerics::MlpParams& classifier, const FrequencyVector& target,
                    std::size_t n_samples, numerics::Rng& rng, CountingMode mode) {
  target.validate();
  if (target.k() != classifier.output_width()) {
    throw ShapeError("target frequency size does not match classifier classes");
  }
  return make_report(estimate_frequencies(generator, classifier, n_samples, rng, mode), target);
}

CountingMode parse_counting_mode(const std::string& name) {
  if (name == "argmax") return CountingMode::kArgmax;
  if (name == "soft") return CountingMode::kSoftMass;
  throw ArgumentError("unknown counting mode '" + name + "' (expected argmax or soft)");
}

std::string to_string(CountingMode mode) {
  return mode == CountingMode::kArgmax ? "argmax" : "soft";
}

}  // namespace sdat::fairness
