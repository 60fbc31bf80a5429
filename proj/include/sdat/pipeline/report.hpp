#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdat/core/finetune.hpp"
#include "sdat/fairness/bias.hpp"

namespace sdat::pipeline {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportFormat = "sdat-report/1";
inline constexpr const char* kWallClockKey = "wall_clock_seconds";

Json to_json(const fairness::FrequencyVector& freq);
Json to_json(const fairness::BiasReport& report);
fairness::BiasReport bias_report_from(const Json& j);

Json to_json(const core::Snapshot& snapshot);
core::Snapshot snapshot_from(const Json& j);

// Column-wise per-step loss curves.
Json curves_json(const std::vector<core::StepMetrics>& log);

// losses.csv: one row per step, every StepMetrics field, shortest round-trip
// decimals so the file can be read back exactly.
std::string losses_csv(const std::vector<core::StepMetrics>& log);
std::vector<core::StepMetrics> parse_losses_csv(const std::string& text);

// Stable text form: two-space indent, trailing newline.
std::string dump(const Json& j);

// Copy of a report without its wall-clock entry, for reproducibility checks.
Json without_wall_clock(Json report);

// Two-row before/after bias table.
std::string summary_table(const Json& report);

// Checks that every artifact listed in the report exists under `dir` and
// matches its recorded digest. Returns the names that do not.
std::vector<std::string> verify_artifacts(const Json& report, const std::filesystem::path& dir);

}  // namespace sdat::pipeline
