#include "sdat/pipeline/stages.hpp"

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sdat/errors.hpp"
#include "sdat/io/csv.hpp"
#include "sdat/io/digest.hpp"
#include "sdat/io/param_file.hpp"
#include "sdat/pipeline/svg.hpp"
#include "sdat/testbed/embedder.hpp"
#include "sdat/testbed/population.hpp"
#include "sdat/testbed/pretrain.hpp"

namespace sdat::pipeline {

namespace fs = std::filesystem;
using numerics::Rng;

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kGenData: return "gen_data";
    case Stage::kTrainClassifier: return "train_classifier";
    case Stage::kPretrain: return "pretrain_generator";
    case Stage::kEvaluateBefore: return "evaluate_before";
    case Stage::kFinetune: return "finetune";
    case Stage::kEvaluateAfter: return "evaluate_after";
  }
  return "unknown";
}

fairness::BiasReport evaluate_generator(const testbed::Generator& generator,
                                        const numerics::MlpParams& classifier,
                                        const ExperimentConfig& cfg) {
  auto rng = Rng::derive(cfg.seed, streams::kEvaluation);
  const fairness::FrequencyVector target{cfg.target_weights, 0};
  return fairness::evaluate(generator, classifier, target, cfg.eval_samples, rng, cfg.counting);
}

fairness::BiasReport evaluate_files(const fs::path& generator, const fs::path& classifier,
                                    const ExperimentConfig& cfg) {
  const auto gen = io::generator_from(io::read_param_file(generator));
  const auto clf = io::mlp_from(io::read_param_file(classifier), "classifier");
  if (clf.input_width() != gen.params.output_width()) {
    throw ShapeError("classifier reads " + std::to_string(clf.input_width()) +
                     "-d points but the generator emits " +
                     std::to_string(gen.params.output_width()) + "-d points");
  }
  if (clf.output_width() != cfg.target_weights.size()) {
    throw ShapeError("classifier has " + std::to_string(clf.output_width()) +
                     " classes but target_weights has " +
                     std::to_string(cfg.target_weights.size()));
  }
  return evaluate_generator(gen, clf, cfg);
}

namespace {

constexpr const char* kManifestFormat = "sdat-stages/1";
constexpr const char* kKeyVersion = "v1\n";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json label_summary(const testbed::TargetDataset& ds) {
  Json j;
  j["n"] = ds.size();
  j["declared_weights"] = ds.declared_weights;
  j["expected_counts"] = testbed::stratified_counts(ds.declared_weights, ds.size());
  j["label_counts"] = ds.label_counts();
  return j;
}

std::string curve_csv(const std::vector<double>& curve) {
  std::string out = "step,mmd2\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out += std::to_string(i + 1) + ',' + io::format_double(curve[i]) + '\n';
  }
  return out;
}

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, const RunOptions& options)
      : cfg_(cfg), options_(options), dir_(cfg.out_dir), start_(std::chrono::steady_clock::now()) {}

  RunResult run() {
    fs::create_directories(dir_);
    fs::remove(dir_ / files::kFailed);
    load_manifest();
    try {
      run_stages();
    } catch (const std::exception& e) {
      std::ofstream marker(dir_ / files::kFailed, std::ios::trunc);
      marker << "stage: " << stage_name(current_) << "\nerror: " << e.what() << "\n";
      spdlog::error("[{}] stage {} failed: {}", cfg_.seed, stage_name(current_), e.what());
      throw;
    }
    return std::move(result_);
  }

 private:
  bool stop_here(Stage stage) const { return stage == options_.stop_after; }

  void run_stages() {
    current_ = Stage::kGenData;
    gen_data();
    if (stop_here(Stage::kGenData)) return;
    current_ = Stage::kTrainClassifier;
    train_classifier();
    if (stop_here(Stage::kTrainClassifier)) return;
    current_ = Stage::kPretrain;
    pretrain();
    if (stop_here(Stage::kPretrain)) return;
    current_ = Stage::kEvaluateBefore;
    before_ = evaluate_and_dump(*pretrained_, files::kSamplesBefore, files::kScatterBefore,
                                "pretrained generator");
    note("evaluate_before: bias " + io::format_double(before_.bias));
    if (stop_here(Stage::kEvaluateBefore)) return;
    current_ = Stage::kFinetune;
    finetune();
    if (stop_here(Stage::kFinetune)) return;
    current_ = Stage::kEvaluateAfter;
    after_ = evaluate_and_dump(*finetuned_, files::kSamplesAfter, files::kScatterAfter,
                               "fine-tuned generator");
    note("evaluate_after: bias " + io::format_double(after_.bias));
    write_report();
  }

  // -- cache bookkeeping ---------------------------------------------------

  void load_manifest() {
    manifest_ = Json::object();
    manifest_["format"] = kManifestFormat;
    manifest_["stages"] = Json::object();
    if (!options_.resume) return;
    const fs::path path = dir_ / files::kManifest;
    if (!fs::exists(path)) return;
    try {
      Json old = Json::parse(io::read_text(path));
      if (old.value("format", "") == kManifestFormat && old.at("stages").is_object()) {
        manifest_ = std::move(old);
      }
    } catch (const std::exception& e) {
      spdlog::warn("ignoring unreadable {}: {}", path.string(), e.what());
    }
  }

  std::string stage_key(const std::string& name, const std::string& upstream,
                        const std::vector<std::string>& keys) const {
    return io::sha256_hex(kKeyVersion + name + "\n" + upstream + "\n" + cfg_.subset_text(keys));
  }

  // Summary of a cached stage whose key and artifacts still match, if any.
  std::optional<Json> cached(const std::string& name, const std::string& key) const {
    if (!options_.resume) return std::nullopt;
    const auto& stages = manifest_.at("stages");
    if (!stages.contains(name)) return std::nullopt;
    const auto& entry = stages.at(name);
    if (entry.value("key", "") != key) return std::nullopt;
    for (const auto& [file, digest] : entry.at("artifacts").items()) {
      const fs::path path = dir_ / file;
      if (!fs::exists(path) || io::file_sha256(path) != digest.get<std::string>()) {
        return std::nullopt;
      }
    }
    result_.reused.push_back(name);
    spdlog::info("[{}] {}: reusing cached artifacts", cfg_.seed, name);
    return entry.at("summary");
  }

  void record(const std::string& name, const std::string& key,
              const std::vector<std::string>& artifacts, Json summary) {
    Json entry;
    entry["key"] = key;
    Json digests = Json::object();
    for (const auto& file : artifacts) digests[file] = io::file_sha256(dir_ / file);
    entry["artifacts"] = std::move(digests);
    entry["summary"] = std::move(summary);
    manifest_["stages"][name] = std::move(entry);
    io::write_text(dir_ / files::kManifest, dump(manifest_));
  }

  void write(const char* file, const std::string& text) {
    io::write_text(dir_ / file, text);
    artifacts_.push_back(file);
  }
  void write(const char* file, const io::ParamFile& param_file) {
    io::write_param_file(dir_ / file, param_file);
    artifacts_.push_back(file);
  }

  void note(std::string line) {
    spdlog::debug("[{}] {}", cfg_.seed, line);
    result_.summary.push_back(std::move(line));
  }

  // -- stages --------------------------------------------------------------

  void gen_data() {
    const std::string name = stage_name(Stage::kGenData);
    data_key_ = stage_key(name, "",
                          {"seed", "target_weights", "target_samples", "classifier_samples"});
    const std::vector<std::string> outputs{files::kTargetCsv, files::kTargetBin,
                                           files::kClassifierDataCsv, files::kClassifierDataBin};
    if (auto summary = cached(name, data_key_)) {
      target_ = io::dataset_from(io::read_param_file(dir_ / files::kTargetBin));
      classifier_data_ = io::dataset_from(io::read_param_file(dir_ / files::kClassifierDataBin));
      data_summary_ = *summary;
      artifacts_.insert(artifacts_.end(), outputs.begin(), outputs.end());
    } else {
      auto target_rng = Rng::derive(cfg_.seed, streams::kTargetData);
      target_ = testbed::sample_population(testbed::PopulationSpec::two_mode(cfg_.target_weights),
                                           cfg_.target_samples, target_rng);
      // The classifier sees a balanced population regardless of the target mix.
      auto clf_rng = Rng::derive(cfg_.seed, streams::kClassifierData);
      classifier_data_ = testbed::sample_population(testbed::PopulationSpec::two_mode({0.5, 0.5}),
                                                    cfg_.classifier_samples, clf_rng);
      write(files::kTargetCsv, io::dataset_csv(*target_));
      write(files::kTargetBin, io::to_param_file(*target_));
      write(files::kClassifierDataCsv, io::dataset_csv(*classifier_data_));
      write(files::kClassifierDataBin, io::to_param_file(*classifier_data_));
      data_summary_ = Json::object();
      data_summary_["target"] = label_summary(*target_);
      data_summary_["classifier_data"] = label_summary(*classifier_data_);
      record(name, data_key_, outputs, data_summary_);
    }
    const auto counts = target_->label_counts();
    std::string line = "gen_data: target labels";
    for (std::size_t k = 0; k < counts.size(); ++k) line += " " + std::to_string(counts[k]);
    note(line + " of " + std::to_string(target_->size()));
  }

  void train_classifier() {
    const std::string name = stage_name(Stage::kTrainClassifier);
    // Keyed on the classifier data settings only, so a new target mix reuses it.
    classifier_key_ = stage_key(name, "",
                                {"seed", "classifier_samples", "classifier_epochs", "classifier_lr"});
    const std::vector<std::string> outputs{files::kClassifier};
    if (auto summary = cached(name, classifier_key_)) {
      classifier_ = numerics::FrozenNetwork(
          io::mlp_from(io::read_param_file(dir_ / files::kClassifier), "classifier"));
      classifier_summary_ = *summary;
      artifacts_.insert(artifacts_.end(), outputs.begin(), outputs.end());
    } else {
      testbed::ClassifierOptions options;
      options.lr = cfg_.classifier_lr;
      auto rng = Rng::derive(cfg_.seed, streams::kClassifierTraining);
      auto trained = testbed::train_classifier(*classifier_data_, cfg_.classifier_epochs, rng, options);
      classifier_ = trained.network;
      write(files::kClassifier, io::to_param_file(classifier_.params(), "classifier"));
      classifier_summary_ = Json::object();
      classifier_summary_["heldout_accuracy"] = trained.heldout_accuracy;
      classifier_summary_["train_size"] = trained.train_size;
      classifier_summary_["heldout_size"] = trained.heldout_size;
      classifier_summary_["epochs"] = cfg_.classifier_epochs;
      classifier_summary_["digest"] = hex64(classifier_.digest());
      record(name, classifier_key_, outputs, classifier_summary_);
    }
    note("train_classifier: held-out accuracy " +
         io::format_double(classifier_summary_.at("heldout_accuracy").get<double>()));
  }

  void pretrain() {
    const std::string name = stage_name(Stage::kPretrain);
    pretrain_key_ = stage_key(name, classifier_key_,
                              {"seed", "pretrain_weights", "pretrain_samples", "pretrain_steps",
                               "pretrain_batch", "pretrain_lr", "conditions"});
    const std::vector<std::string> outputs{files::kPretrained, files::kPretrainCurve};
    if (auto summary = cached(name, pretrain_key_)) {
      pretrained_ = io::generator_from(io::read_param_file(dir_ / files::kPretrained));
      pretrain_summary_ = *summary;
      artifacts_.insert(artifacts_.end(), outputs.begin(), outputs.end());
    } else {
      testbed::PretrainOptions options;
      options.generator.conditions = cfg_.conditions;
      options.batch_size = cfg_.pretrain_batch;
      options.lr = cfg_.pretrain_lr;
      auto rng = Rng::derive(cfg_.seed, streams::kPretrain);
      auto result = testbed::pretrain_generator(cfg_.pretrain_weights, cfg_.pretrain_samples,
                                                cfg_.pretrain_steps, rng, &classifier_.params(),
                                                options);
      pretrained_ = result.generator;
      write(files::kPretrained, io::to_param_file(*pretrained_));
      write(files::kPretrainCurve, curve_csv(result.mmd_curve));
      pretrain_summary_ = Json::object();
      pretrain_summary_["steps"] = cfg_.pretrain_steps;
      pretrain_summary_["bandwidth"] = result.bandwidth;
      pretrain_summary_["final_mmd2"] =
          result.mmd_curve.empty() ? Json(nullptr) : Json(result.mmd_curve.back());
      pretrain_summary_["check_frequencies"] =
          result.frequencies ? Json(*result.frequencies) : Json(nullptr);
      record(name, pretrain_key_, outputs, pretrain_summary_);
    }
    note("pretrain_generator: bandwidth " +
         io::format_double(pretrain_summary_.at("bandwidth").get<double>()));
  }

  fairness::BiasReport evaluate_and_dump(const testbed::Generator& gen, const char* csv_file,
                                         const char* svg_file, const std::string& title) {
    const auto report = evaluate_generator(gen, classifier_.params(), cfg_);
    // Same stream as the evaluation, so these are exactly the scored samples.
    auto rng = Rng::derive(cfg_.seed, streams::kEvaluation);
    const auto batch = testbed::generate_batch(gen, cfg_.eval_samples, rng);
    const auto labels = testbed::classify(classifier_.params(), batch.points);
    write(csv_file, io::points_csv(batch.points, labels));
    if (cfg_.emit_svg) {
      try {
        io::write_text(dir_ / svg_file,
                       scatter_svg(batch.points, labels,
                                   title + ", bias " + io::format_double(report.bias)));
        plots_.push_back(svg_file);
      } catch (const std::exception& e) {
        spdlog::warn("[{}] skipping {}: {}", cfg_.seed, svg_file, e.what());
      }
    }
    return report;
  }

  void finetune() {
    const std::string name = stage_name(Stage::kFinetune);
    finetune_key_ = stage_key(name, pretrain_key_ + data_key_,
                              {"seed", "target_weights", "tau", "lambda_reg", "batch_size",
                               "steps", "target_batches", "lr", "confidence_source", "counting",
                               "eval_samples", "eval_every", "embedder_seed"});
    const std::vector<std::string> outputs{files::kFinetuned, files::kLosses};
    embedder_ = testbed::make_embedder(cfg_.embedder_seed);
    if (auto summary = cached(name, finetune_key_)) {
      finetuned_ = io::generator_from(io::read_param_file(dir_ / files::kFinetuned));
      log_ = parse_losses_csv(io::read_text(dir_ / files::kLosses));
      for (const auto& s : summary->at("snapshots")) snapshots_.push_back(snapshot_from(s));
      artifacts_.insert(artifacts_.end(), outputs.begin(), outputs.end());
    } else {
      core::TargetSampler sampler(target_->samples, classifier_.params());
      core::SdatModels models{*pretrained_, classifier_, embedder_};
      core::SdatConfig sdat = cfg_.sdat;
      sdat.seed = cfg_.seed;
      core::FinetuneOptions options;
      options.eval_every = cfg_.eval_every;
      options.eval_samples = cfg_.eval_samples;
      options.target_freq = {cfg_.target_weights, 0};
      options.counting = cfg_.counting;
      options.eval_seed = Rng::derive_seed(cfg_.seed, streams::kEvaluation);
      const std::size_t every = std::max<std::size_t>(1, sdat.steps / 10);
      const auto seed = cfg_.seed;
      options.on_step = [every, seed](const core::StepMetrics& m) {
        if (m.step % every == 0) {
          spdlog::debug("[{}] step {} l_align {:.4f} l_reg {:.5f} gate {:.2f}", seed, m.step,
                        m.l_align, m.l_reg, m.gate_rate);
        }
      };
      auto rng = Rng::derive(cfg_.seed, streams::kFinetune);
      auto result = core::sdat_finetune(*pretrained_, models, sampler, sdat, rng, options);
      if (!classifier_.intact() || !embedder_.intact()) {
        throw std::logic_error("a frozen network changed during fine-tuning");
      }
      finetuned_ = std::move(result.generator);
      log_ = std::move(result.log);
      snapshots_ = std::move(result.snapshots);
      write(files::kFinetuned, io::to_param_file(*finetuned_));
      write(files::kLosses, losses_csv(log_));
      Json snaps = Json::array();
      for (const auto& s : snapshots_) snaps.push_back(to_json(s));
      Json fresh;
      fresh["snapshots"] = std::move(snaps);
      record(name, finetune_key_, outputs, fresh);
    }
    note("finetune: " + std::to_string(log_.size()) + " steps");
  }

  void write_report() {
    auto probe_rng = Rng::derive(cfg_.seed, streams::kProbes);
    const auto probes = testbed::draw_latents(*pretrained_, cfg_.probe_samples, probe_rng);
    const double dissim = core::embedding_dissimilarity(*finetuned_, *pretrained_,
                                                        embedder_.params(), probes.noise,
                                                        probes.conditions);

    Json report;
    report["format"] = kReportFormat;
    report["seed"] = cfg_.seed;
    report["config"] = cfg_.to_json();
    report["data"] = data_summary_;
    report["classifier"] = classifier_summary_;
    report["classifier"]["frozen_intact"] = classifier_.intact();
    report["pretrain"] = pretrain_summary_;
    report["before"] = to_json(before_);
    report["after"] = to_json(after_);
    Json emb;
    emb["probe_samples"] = cfg_.probe_samples;
    emb["embedder_digest"] = hex64(embedder_.digest());
    emb["mean_dissimilarity"] = dissim;
    report["embedding_dissimilarity"] = std::move(emb);

    Json ft;
    ft["steps"] = log_.size();
    if (!log_.empty()) {
      double gate = 0.0;
      for (const auto& m : log_) gate += m.gate_rate;
      const auto& last = log_.back();
      ft["final_l_align"] = last.l_align;
      ft["final_l_reg"] = last.l_reg;
      ft["final_total"] = last.total;
      ft["mean_gate_rate"] = gate / static_cast<double>(log_.size());
    }
    report["finetune"] = std::move(ft);
    report["curves"] = curves_json(log_);
    Json snaps = Json::array();
    for (const auto& s : snapshots_) snaps.push_back(to_json(s));
    report["snapshots"] = std::move(snaps);

    Json artifacts = Json::object();
    for (const auto& file : artifacts_) {
      Json entry;
      entry["path"] = file;
      entry["sha256"] = io::file_sha256(dir_ / file);
      artifacts[file] = std::move(entry);
    }
    report["artifacts"] = std::move(artifacts);
    report["plots"] = plots_;
    report[kWallClockKey] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();

    io::write_text(dir_ / files::kReport, dump(report));
    result_.report = std::move(report);
  }

  const ExperimentConfig& cfg_;
  RunOptions options_;
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  Stage current_ = Stage::kGenData;
  mutable RunResult result_;
  Json manifest_;

  std::string data_key_, classifier_key_, pretrain_key_, finetune_key_;
  std::vector<std::string> artifacts_;
  std::vector<std::string> plots_;

  std::optional<testbed::TargetDataset> target_, classifier_data_;
  numerics::FrozenNetwork classifier_, embedder_;
  std::optional<testbed::Generator> pretrained_, finetuned_;
  std::vector<core::StepMetrics> log_;
  std::vector<core::Snapshot> snapshots_;
  fairness::BiasReport before_, after_;
  Json data_summary_, classifier_summary_, pretrain_summary_;
};

}  // namespace

RunResult run_pipeline(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  return Runner(cfg, options).run();
}

}  // namespace sdat::pipeline
