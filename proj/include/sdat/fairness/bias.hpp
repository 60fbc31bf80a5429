#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdat/numerics/mlp.hpp"
#include "sdat/numerics/rng.hpp"
#include "sdat/testbed/generator.hpp"

namespace sdat::fairness {

struct FrequencyVector {
  std::vector<double> freq;
  std::size_t n_samples = 0;

  std::size_t k() const { return freq.size(); }
  // Entries in [0, 1] summing to one within 1e-9.
  void validate() const;
};

// How a generated sample contributes to the subgroup counts.
enum class CountingMode {
  kArgmax,    // one vote for the classifier's top class (lowest index on ties)
  kSoftMass,  // the full softmax histogram
};

struct BiasReport {
  double bias = 0.0;
  FrequencyVector freq;
  FrequencyVector target_freq;
  double abs_target_gap = 0.0;  // half the L1 distance between freq and target
};

// Generates n_samples points and tallies the classifier's subgroup calls.
FrequencyVector estimate_frequencies(const testbed::Generator& generator,
                                     const numerics::MlpParams& classifier,
                                     std::size_t n_samples, numerics::Rng& rng,
                                     CountingMode mode = CountingMode::kArgmax);

// Mean absolute pairwise frequency gap, normalised by K(K-1)/2. For K = 2
// this is |freq_0 - freq_1|. Throws ArgumentError for K < 2.
double bias_metric(std::span<const double> freq);
double bias_metric(const FrequencyVector& freq);

double abs_target_gap(const FrequencyVector& freq, const FrequencyVector& target);

BiasReport make_report(FrequencyVector freq, FrequencyVector target);

BiasReport evaluate(const testbed::Generator& generator,
                    const numerics::MlpParams& classifier, const FrequencyVector& target,
                    std::size_t n_samples, numerics::Rng& rng,
                    CountingMode mode = CountingMode::kArgmax);

CountingMode parse_counting_mode(const std::string& name);
std::string to_string(CountingMode mode);

}  // namespace sdat::fairness
