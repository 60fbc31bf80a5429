#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdat/core/finetune.hpp"
#include "sdat/fairness/bias.hpp"
#include <json.hpp>

namespace sdat::pipeline {

// Invalid configuration; `field` names the offending key when there is one.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;

  std::vector<double> pretrain_weights{0.9, 0.1};
  std::vector<double> target_weights{0.5, 0.5};

  std::size_t target_samples = 2000;
  std::size_t classifier_samples = 2000;
  std::size_t classifier_epochs = 200;
  double classifier_lr = 1e-2;

  std::size_t pretrain_samples = 2000;
  std::size_t pretrain_steps = 3000;
  std::size_t pretrain_batch = 128;
  double pretrain_lr = 3e-3;
  std::size_t conditions = 1;

  core::SdatConfig sdat;  // tau, lambda_reg, batch_size, steps, target_batches, lr, confidence_source

  fairness::CountingMode counting = fairness::CountingMode::kArgmax;
  std::size_t eval_samples = 2000;
  std::size_t eval_every = 0;
  std::size_t probe_samples = 512;
  std::uint64_t embedder_seed = 0x5eed0e3bULL;
  bool emit_svg = true;
  std::string out_dir = "sdat_out";

  // Parses `key = value` lines over the defaults. '#' starts a comment.
  // Unknown or repeated keys, malformed values and violated bounds throw
  // ConfigError naming the field.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Sets one key from its text form, with the same checks as parse.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  // Every key in canonical order with its canonical text value.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string to_text() const;
  // Typed echo for reports, canonical key order.
  nlohmann::ordered_json to_json() const;

  // Canonical text of just these keys, for stage cache keys.
  std::string subset_text(const std::vector<std::string>& keys) const;
};

// All recognised keys, in canonical order.
const std::vector<std::string>& config_keys();

}  // namespace sdat::pipeline
