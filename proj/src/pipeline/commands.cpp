#include "sdat/pipeline/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sdat/errors.hpp"
#include "sdat/io/csv.hpp"
#include "sdat/numerics/prob_batch.hpp"
#include "sdat/pipeline/config.hpp"
#include "sdat/pipeline/report.hpp"
#include "sdat/pipeline/stages.hpp"
#include "sdat/transport/assignment.hpp"

namespace sdat::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr double kAssignSimplexTolerance = 1e-6;

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("sdat");
    logger->set_pattern("%^%l%$ %v");
    spdlog::set_default_logger(logger);
  });
  const char* env = std::getenv("SDAT_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else if (level == "info" || level.empty()) {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw UsageError("SDAT_LOG must be error, info or debug, got '" + level + "'");
  }
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool resume = false;
  std::string seeds;
  std::vector<std::string> overrides;
};

ExperimentConfig build_config(const CommonFlags& flags) {
  ExperimentConfig cfg =
      flags.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(flags.config_path);
  for (const auto& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  cfg.validate();
  return cfg;
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".sdat_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw UsageError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      seeds.push_back(v);
    } catch (const std::logic_error&) {
      throw UsageError("--seeds: '" + part + "' is not a nonnegative integer");
    }
  }
  if (seeds.empty()) throw UsageError("--seeds: empty list");
  return seeds;
}

int stage_command(const ExperimentConfig& cfg, Stage stop_after, bool resume, std::ostream& out) {
  prepare_out_dir(cfg.out_dir);
  RunOptions options;
  options.stop_after = stop_after;
  options.resume = resume;
  const auto result = run_pipeline(cfg, options);
  for (const auto& line : result.summary) out << line << "\n";
  if (!result.report.is_null()) {
    out << "\n" << summary_table(result.report);
    out << "report: " << (fs::path(cfg.out_dir) / files::kReport).string() << "\n";
  }
  return kExitOk;
}

int sweep(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds, bool resume,
          std::ostream& out, std::ostream& err) {
  struct Outcome {
    int code = kExitOk;
    std::string message;
    Json report;
  };
  std::vector<Outcome> outcomes(seeds.size());
  std::vector<ExperimentConfig> configs;
  for (auto s : seeds) {
    ExperimentConfig cfg = base;
    cfg.seed = s;
    cfg.out_dir = (fs::path(base.out_dir) / ("seed_" + std::to_string(s))).string();
    prepare_out_dir(cfg.out_dir);
    configs.push_back(std::move(cfg));
  }
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          RunOptions options;
          options.resume = resume;
          outcomes[i].report = run_pipeline(configs[i], options).report;
        } catch (const std::exception& e) {
          outcomes[i].code = kExitFailure;
          outcomes[i].message = e.what();
        }
      });
    }
  }
  int code = kExitOk;
  out << "seed | bias before | bias after | abs target gap\n";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (outcomes[i].code != kExitOk) {
      err << "seed " << seeds[i] << " failed: " << outcomes[i].message << "\n";
      out << seeds[i] << " | failed\n";
      code = kExitFailure;
      continue;
    }
    const auto& r = outcomes[i].report;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%llu | %.3f | %.3f | %.3f\n",
                  static_cast<unsigned long long>(seeds[i]), r.at("before").at("bias").get<double>(),
                  r.at("after").at("bias").get<double>(),
                  r.at("after").at("abs_target_gap").get<double>());
    out << buf;
  }
  return code;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& generator,
                 const std::string& classifier, std::ostream& out) {
  for (const auto& path : {generator, classifier}) {
    if (!fs::exists(path)) throw UsageError("no such file: " + path);
  }
  const auto report = evaluate_files(generator, classifier, cfg);
  Json j = to_json(report);
  const std::string text = dump(j);
  prepare_out_dir(cfg.out_dir);
  io::write_text(fs::path(cfg.out_dir) / files::kBiasReport, text);
  out << text;
  return kExitOk;
}

numerics::ProbBatch read_histograms(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path);
  auto m = io::read_csv_matrix(path);
  try {
    return numerics::ProbBatch(std::move(m), kAssignSimplexTolerance);
  } catch (const ArgumentError& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const ShapeError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

int cmd_assign(const std::string& p_path, const std::string& u_path, std::ostream& out) {
  const auto p = read_histograms(p_path);
  const auto u = read_histograms(u_path);
  if (p.n() != u.n() || p.k() != u.k()) {
    throw UsageError("batches differ in shape: " + std::to_string(p.n()) + "x" +
                     std::to_string(p.k()) + " vs " + std::to_string(u.n()) + "x" +
                     std::to_string(u.k()));
  }
  const auto a = transport::solve_assignment(transport::l1_cost_matrix(p, u));
  Json j;
  j["n"] = p.n();
  j["k"] = p.k();
  j["sigma"] = a.sigma;
  j["cost"] = a.cost;
  out << dump(j);
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Subgroup distribution aligned tuning on a synthetic testbed", "sdat"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonFlags flags;
  app.add_option("--config", flags.config_path, "key = value configuration file");
  app.add_option("--seed", flags.seed, "experiment seed (overrides the config)");
  app.add_option("--out", flags.out_dir, "output directory (overrides out_dir)");
  app.add_flag("--resume", flags.resume, "reuse stage artifacts whose inputs are unchanged");
  app.add_option("--seeds", flags.seeds, "comma-separated seeds run in parallel (run only)");
  app.add_option("--set", flags.overrides, "KEY=VALUE configuration override, repeatable");

  auto* gen_data = app.add_subcommand("gen-data", "sample the target and classifier datasets");
  auto* train = app.add_subcommand("train-classifier", "train the frozen subgroup classifier");
  auto* pretrain = app.add_subcommand("pretrain-generator", "fit the biased starting generator");
  auto* finetune = app.add_subcommand("finetune", "run fine-tuning after the earlier stages");
  auto* run = app.add_subcommand("run", "run every stage and write report.json");

  auto* evaluate = app.add_subcommand("evaluate", "bias of a saved generator");
  std::string generator_path, classifier_path;
  evaluate->add_option("--generator", generator_path, "generator parameter file")->required();
  evaluate->add_option("--classifier", classifier_path, "classifier parameter file")->required();

  auto* assign = app.add_subcommand("assign", "optimal matching between two histogram batches");
  std::string p_path, u_path;
  assign->add_option("P", p_path, "generated histograms, CSV")->required();
  assign->add_option("U", u_path, "target histograms, CSV")->required();

  std::vector<const char*> argv{"sdat"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  configure_logging();
  if (assign->parsed()) return cmd_assign(p_path, u_path, out);

  const ExperimentConfig cfg = build_config(flags);
  if (!flags.seeds.empty() && !run->parsed()) throw UsageError("--seeds applies to run only");
  if (evaluate->parsed()) return cmd_evaluate(cfg, generator_path, classifier_path, out);
  if (gen_data->parsed()) return stage_command(cfg, Stage::kGenData, true, out);
  if (train->parsed()) return stage_command(cfg, Stage::kTrainClassifier, true, out);
  if (pretrain->parsed()) return stage_command(cfg, Stage::kPretrain, true, out);
  if (finetune->parsed()) return stage_command(cfg, Stage::kFinetune, true, out);
  if (!flags.seeds.empty()) return sweep(cfg, parse_seed_list(flags.seeds), flags.resume, out, err);
  return stage_command(cfg, Stage::kEvaluateAfter, flags.resume, out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

}  // namespace sdat::pipeline
