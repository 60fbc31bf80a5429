#include "sdat/pipeline/report.hpp"

#include <cstdio>
#include <sstream>

#include "sdat/errors.hpp"
#include "sdat/io/csv.hpp"
#include "sdat/io/digest.hpp"

namespace sdat::pipeline {

namespace {

const char* const kLossColumns[] = {"step",     "l_align",   "l_reg",          "total",
                                    "gate_passed", "gate_rate", "transport_cost", "identity_cost"};

fairness::FrequencyVector frequency_from(const Json& j) {
  fairness::FrequencyVector out;
  out.freq = j.at("freq").get<std::vector<double>>();
  out.n_samples = j.at("n_samples").get<std::size_t>();
  return out;
}

}  // namespace

Json to_json(const fairness::FrequencyVector& freq) {
  Json j;
  j["freq"] = freq.freq;
  j["n_samples"] = freq.n_samples;
  return j;
}

Json to_json(const fairness::BiasReport& report) {
  Json j;
  j["bias"] = report.bias;
  j["freq"] = to_json(report.freq);
  j["target_freq"] = to_json(report.target_freq);
  j["abs_target_gap"] = report.abs_target_gap;
  return j;
}

fairness::BiasReport bias_report_from(const Json& j) {
  fairness::BiasReport out;
  out.bias = j.at("bias").get<double>();
  out.freq = frequency_from(j.at("freq"));
  out.target_freq = frequency_from(j.at("target_freq"));
  out.abs_target_gap = j.at("abs_target_gap").get<double>();
  return out;
}

Json to_json(const core::Snapshot& snapshot) {
  Json j;
  j["step"] = snapshot.step;
  j["report"] = to_json(snapshot.report);
  return j;
}

core::Snapshot snapshot_from(const Json& j) {
  return {j.at("step").get<std::size_t>(), bias_report_from(j.at("report"))};
}

Json curves_json(const std::vector<core::StepMetrics>& log) {
  Json step = Json::array(), align = Json::array(), reg = Json::array(), total = Json::array(),
       gate = Json::array(), cost = Json::array();
  for (const auto& m : log) {
    step.push_back(m.step);
    align.push_back(m.l_align);
    reg.push_back(m.l_reg);
    total.push_back(m.total);
    gate.push_back(m.gate_rate);
    cost.push_back(m.transport_cost);
  }
  Json j;
  j["step"] = std::move(step);
  j["l_align"] = std::move(align);
  j["l_reg"] = std::move(reg);
  j["total"] = std::move(total);
  j["gate_rate"] = std::move(gate);
  j["transport_cost"] = std::move(cost);
  return j;
}

std::string losses_csv(const std::vector<core::StepMetrics>& log) {
  std::string out;
  for (std::size_t c = 0; c < std::size(kLossColumns); ++c) {
    if (c) out += ',';
    out += kLossColumns[c];
  }
  out += '\n';
  for (const auto& m : log) {
    out += std::to_string(m.step) + ',' + io::format_double(m.l_align) + ',' +
           io::format_double(m.l_reg) + ',' + io::format_double(m.total) + ',' +
           std::to_string(m.gate_passed) + ',' + io::format_double(m.gate_rate) + ',' +
           io::format_double(m.transport_cost) + ',' + io::format_double(m.identity_cost) + '\n';
  }
  return out;
}

std::vector<core::StepMetrics> parse_losses_csv(const std::string& text) {
  const auto header_end = text.find('\n');
  if (header_end == std::string::npos) throw FormatError("losses.csv: missing header");
  std::vector<core::StepMetrics> log;
  const std::string body = text.substr(header_end + 1);
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return log;
  const auto table = io::parse_csv_matrix(body);
  if (table.cols() != std::size(kLossColumns)) {
    throw FormatError("losses.csv: expected " + std::to_string(std::size(kLossColumns)) +
                      " columns");
  }
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto r = table.row(i);
    core::StepMetrics m;
    m.step = static_cast<std::size_t>(r[0]);
    m.l_align = r[1];
    m.l_reg = r[2];
    m.total = r[3];
    m.gate_passed = static_cast<std::size_t>(r[4]);
    m.gate_rate = r[5];
    m.transport_cost = r[6];
    m.identity_cost = r[7];
    log.push_back(m);
  }
  return log;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json without_wall_clock(Json report) {
  report.erase(kWallClockKey);
  return report;
}

std::string summary_table(const Json& report) {
  const auto target = report.at("before").at("target_freq").at("freq").get<std::vector<double>>();
  std::string label = "Bias (target ";
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (k) label += '/';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", target[k] * 100.0);
    label += buf;
  }
  label += ")";
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-10s | %s\n", "Method", label.c_str());
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s | %.3f\n", "w/o SDAT",
                report.at("before").at("bias").get<double>());
  out << buf;
  std::snprintf(buf, sizeof buf, "%-10s | %.3f\n", "with SDAT",
                report.at("after").at("bias").get<double>());
  out << buf;
  return out.str();
}

std::vector<std::string> verify_artifacts(const Json& report, const std::filesystem::path& dir) {
  std::vector<std::string> bad;
  for (const auto& [name, entry] : report.at("artifacts").items()) {
    const auto path = dir / entry.at("path").get<std::string>();
    if (!std::filesystem::exists(path) ||
        io::file_sha256(path) != entry.at("sha256").get<std::string>()) {
      bad.push_back(name);
    }
  }
  return bad;
}

}  // namespace sdat::pipeline
