#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdat/pipeline/config.hpp"
#include "sdat/pipeline/report.hpp"
#include "sdat/testbed/classifier.hpp"
#include "sdat/testbed/generator.hpp"

namespace sdat::pipeline {

enum class Stage {
  kGenData,
  kTrainClassifier,
  kPretrain,
  kEvaluateBefore,
  kFinetune,
  kEvaluateAfter,
};

const char* stage_name(Stage stage);

// RNG stream ids under the experiment seed. Before and after evaluations share
// kEvaluation so both see the same noise.
namespace streams {
inline constexpr std::uint64_t kTargetData = 1;
inline constexpr std::uint64_t kClassifierData = 2;
inline constexpr std::uint64_t kClassifierTraining = 3;
inline constexpr std::uint64_t kPretrain = 4;
inline constexpr std::uint64_t kFinetune = 5;
inline constexpr std::uint64_t kEvaluation = 6;
inline constexpr std::uint64_t kProbes = 7;
}  // namespace streams

// File names inside the output directory.
namespace files {
inline constexpr const char* kTargetCsv = "target_dataset.csv";
inline constexpr const char* kTargetBin = "target_dataset.bin";
inline constexpr const char* kClassifierDataCsv = "classifier_dataset.csv";
inline constexpr const char* kClassifierDataBin = "classifier_dataset.bin";
inline constexpr const char* kClassifier = "classifier.bin";
inline constexpr const char* kPretrained = "generator_pretrained.bin";
inline constexpr const char* kPretrainCurve = "pretrain_mmd.csv";
inline constexpr const char* kFinetuned = "generator_finetuned.bin";
inline constexpr const char* kLosses = "losses.csv";
inline constexpr const char* kSamplesBefore = "samples_before.csv";
inline constexpr const char* kSamplesAfter = "samples_after.csv";
inline constexpr const char* kScatterBefore = "samples_before.svg";
inline constexpr const char* kScatterAfter = "samples_after.svg";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kBiasReport = "bias_report.json";
inline constexpr const char* kManifest = "stages.json";
inline constexpr const char* kFailed = "FAILED";
}  // namespace files

struct RunOptions {
  // Reuse stage outputs recorded in stages.json when their cache key and file
  // digests still match.
  bool resume = false;
  Stage stop_after = Stage::kEvaluateAfter;
};

struct RunResult {
  Json report;                       // null unless the pipeline ran to the end
  std::vector<std::string> reused;   // stages restored from the cache
  std::vector<std::string> summary;  // one human-readable line per stage
};

// Runs the stages in order into cfg.out_dir. On a stage failure the partial
// artifacts stay on disk, a FAILED marker names the stage, and the exception
// propagates.
RunResult run_pipeline(const ExperimentConfig& cfg, const RunOptions& options = {});

// Bias of a saved generator under a saved classifier, sampled with the
// evaluation stream of cfg.seed. Throws FormatError / ShapeError on bad or
// mismatched files.
fairness::BiasReport evaluate_files(const std::filesystem::path& generator,
                                    const std::filesystem::path& classifier,
                                    const ExperimentConfig& cfg);

// In-memory counterpart of evaluate_files.
fairness::BiasReport evaluate_generator(const testbed::Generator& generator,
                                        const numerics::MlpParams& classifier,
                                        const ExperimentConfig& cfg);

}  // namespace sdat::pipeline
