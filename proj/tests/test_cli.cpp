#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "sdat/io/csv.hpp"
#include "sdat/io/param_file.hpp"
#include "sdat/pipeline/commands.hpp"
#include "sdat/pipeline/report.hpp"
#include "sdat/pipeline/stages.hpp"

using namespace sdat;
using namespace sdat::pipeline;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sdat_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

// Small enough to finish in well under a second. Zero pretraining steps
// skip the pretraining quality bar.
std::vector<std::string> tiny(const fs::path& out, const std::string& pretrain_steps = "0") {
  return {"--out", out.string(), "--set", "classifier_samples=400", "--set",
          "target_samples=200", "--set", "pretrain_steps=" + pretrain_steps, "--set", "steps=5", "--set",
          "batch_size=16", "--set", "eval_samples=200", "--set", "probe_samples=32"};
}

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  setenv("SDAT_LOG", "error", 1);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  CHECK(cli({"run", "--no-such-flag"}).code == kExitUsage);
  CHECK(cli({"evaluate"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  const auto r = cli({"run", "--set", "laambda_reg=1"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("laambda_reg") != std::string::npos);
  CHECK(cli({"run", "--config", "/nonexistent/sdat.cfg"}).code == kExitUsage);
  CHECK(cli({"gen-data", "--seeds", "1,2"}).code == kExitUsage);
}

TEST_CASE("unwritable output directory exits with 2") {
  setenv("SDAT_LOG", "error", 1);
  const auto dir = scratch_dir("blocked");
  fs::create_directories(dir);
  io::write_text(dir / "file", "x");
  CHECK(cli({"gen-data", "--out", (dir / "file" / "sub").string()}).code == kExitUsage);
}

TEST_CASE("gen-data writes stratified datasets") {
  setenv("SDAT_LOG", "error", 1);
  for (const auto& [weights, expect] :
       std::vector<std::pair<std::string, std::vector<std::size_t>>>{
           {"0.5,0.5", {1000, 1000}}, {"0.3,0.7", {600, 1400}}}) {
    const auto dir = scratch_dir("gen_" + weights);
    const auto r = cli({"gen-data", "--out", (dir / "nested").string(), "--set",
                        "target_weights=" + weights});
    REQUIRE(r.code == kExitOk);
    const auto ds = io::dataset_from(io::read_param_file(dir / "nested" / files::kTargetBin));
    CHECK(ds.label_counts() == expect);
    CHECK(fs::exists(dir / "nested" / files::kTargetCsv));
    CHECK(r.out.find("target labels") != std::string::npos);
  }
}

TEST_CASE("assign command") {
  setenv("SDAT_LOG", "error", 1);
  const auto dir = scratch_dir("assign");
  fs::create_directories(dir);
  io::write_text(dir / "p.csv", "0.9,0.1\n0.2,0.8\n");
  io::write_text(dir / "u.csv", "0.1,0.9\n0.8,0.2\n");
  auto r = cli({"assign", (dir / "p.csv").string(), (dir / "u.csv").string()});
  REQUIRE(r.code == kExitOk);
  const auto j = Json::parse(r.out);
  CHECK(j.at("sigma") == Json::array({1, 0}));
  CHECK(j.at("cost").get<double>() == doctest::Approx(0.4).epsilon(1e-14));

  r = cli({"assign", (dir / "p.csv").string(), (dir / "p.csv").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(Json::parse(r.out).at("sigma") == Json::array({0, 1}));
  CHECK(Json::parse(r.out).at("cost").get<double>() == 0.0);

  io::write_text(dir / "bad.csv", "0.5,0.5\n0.7,0.7\n0.2,0.8\n0.9,0.9\n");
  io::write_text(dir / "ok3.csv", "0.5,0.5\n0.5,0.5\n0.2,0.8\n0.5,0.5\n");
  r = cli({"assign", (dir / "bad.csv").string(), (dir / "ok3.csv").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("1") != std::string::npos);
  CHECK(r.err.find("3") != std::string::npos);

  io::write_text(dir / "mal.csv", "0.5,zero\n");
  CHECK(cli({"assign", (dir / "mal.csv").string(), (dir / "u.csv").string()}).code == kExitUsage);
  CHECK(cli({"assign", (dir / "p.csv").string(), (dir / "ok3.csv").string()}).code == kExitUsage);
  CHECK(cli({"assign", (dir / "nope.csv").string(), (dir / "u.csv").string()}).code == kExitUsage);
}

TEST_CASE("run writes a complete report whose artifacts verify") {
  setenv("SDAT_LOG", "error", 1);
  const auto dir = scratch_dir("run");
  const auto r = cli(with({"run"}, tiny(dir)));
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("w/o SDAT") != std::string::npos);
  const auto report = Json::parse(io::read_text(dir / files::kReport));
  CHECK(report.at("format") == kReportFormat);
  CHECK(report.contains(kWallClockKey));
  CHECK(verify_artifacts(report, dir).empty());
  for (const char* f : {files::kLosses, files::kSamplesBefore, files::kSamplesAfter,
                        files::kScatterBefore, files::kScatterAfter}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(report.at("curves").at("step").size() == 5);
  CHECK_FALSE(fs::exists(dir / files::kFailed));

  // Resume reuses every cached stage and reproduces the report.
  const auto again = cli(with({"run", "--resume"}, tiny(dir)));
  REQUIRE(again.code == kExitOk);
  const auto second = Json::parse(io::read_text(dir / files::kReport));
  CHECK(without_wall_clock(second) == without_wall_clock(report));

  // A tampered artifact no longer matches its digest.
  io::write_text(dir / files::kLosses, "tampered\n");
  CHECK(verify_artifacts(report, dir) == std::vector<std::string>{files::kLosses});
}

TEST_CASE("evaluate command") {
  setenv("SDAT_LOG", "error", 1);
  const auto dir = scratch_dir("evaluate");
  REQUIRE(cli(with({"pretrain-generator"}, tiny(dir))).code == kExitOk);
  const auto gen = (dir / files::kPretrained).string();
  const auto clf = (dir / files::kClassifier).string();
  const auto r = cli(with({"evaluate", "--generator", gen, "--classifier", clf}, tiny(dir)));
  REQUIRE(r.code == kExitOk);
  const auto from_files = Json::parse(r.out);
  CHECK(fs::exists(dir / files::kBiasReport));

  ExperimentConfig cfg;
  cfg.set("eval_samples", "200");
  const auto in_memory = evaluate_generator(io::generator_from(io::read_param_file(gen)),
                                            io::mlp_from(io::read_param_file(clf), "classifier"),
                                            cfg);
  CHECK(from_files == to_json(in_memory));

  // Swapped files: kind mismatch. Wrong widths: shape mismatch.
  CHECK(cli({"evaluate", "--generator", clf, "--classifier", gen}).code == kExitUsage);
  numerics::Rng rng(1);
  const auto wide = numerics::MlpParams::init(std::vector<std::size_t>{3, 4, 2}, rng);
  io::write_param_file(dir / "wide.bin", io::to_param_file(wide, "classifier"));
  CHECK(cli({"evaluate", "--generator", gen, "--classifier", (dir / "wide.bin").string()}).code ==
        kExitUsage);
  io::write_text(dir / "junk.bin", "not a parameter file");
  CHECK(cli({"evaluate", "--generator", (dir / "junk.bin").string(), "--classifier", clf}).code ==
        kExitUsage);
}

TEST_CASE("stage failure exits with 1 and leaves a marker") {
  setenv("SDAT_LOG", "error", 1);
  const auto dir = scratch_dir("fail");
  // Ten pretraining steps cannot meet the frequency bar.
  const auto r = cli(with({"run"}, tiny(dir, "10")));
  CHECK(r.code == kExitFailure);
  REQUIRE(fs::exists(dir / files::kFailed));
  CHECK(io::read_text(dir / files::kFailed).find("pretrain_generator") != std::string::npos);
  CHECK(fs::exists(dir / files::kClassifier));
}

TEST_CASE("seed sweep isolates each run") {
  setenv("SDAT_LOG", "error", 1);
  const auto dir = scratch_dir("sweep");
  const auto r = cli(with({"run", "--seeds", "3,4"}, tiny(dir)));
  REQUIRE(r.code == kExitOk);
  const auto a = Json::parse(io::read_text(dir / "seed_3" / files::kReport));
  const auto b = Json::parse(io::read_text(dir / "seed_4" / files::kReport));
  CHECK(a.at("seed") == 3);
  CHECK(b.at("seed") == 4);

  // Same numbers as a standalone run with that seed.
  const auto solo = scratch_dir("solo");
  REQUIRE(cli(with({"run", "--seed", "3"}, tiny(solo))).code == kExitOk);
  auto strip = [](Json j) {
    j = without_wall_clock(std::move(j));
    j["config"].erase("out_dir");
    return j;
  };
  CHECK(strip(Json::parse(io::read_text(solo / files::kReport))) == strip(a));
}

TEST_CASE("bad SDAT_LOG value is a usage error") {
  setenv("SDAT_LOG", "chatty", 1);
  CHECK(cli({"gen-data", "--out", scratch_dir("log").string()}).code == kExitUsage);
  setenv("SDAT_LOG", "error", 1);
}
