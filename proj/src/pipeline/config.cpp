#include "sdat/pipeline/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "sdat/errors.hpp"
#include "sdat/io/csv.hpp"
#include "sdat/testbed/population.hpp"

namespace sdat::pipeline {

namespace {

using Json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key, "expected a finite number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> parse_weights(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_double(key, trim(part)));
  try {
    testbed::require_simplex(out, key.c_str());
  } catch (const ArgumentError& e) {
    throw ConfigError(key, "weights must be nonnegative and sum to 1");
  }
  if (out.size() != 2) throw ConfigError(key, "the testbed has exactly two subgroups");
  return out;
}

std::string weights_text(const std::vector<double>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ',';
    out += io::format_double(w[i]);
  }
  return out;
}

std::string hex_u64(std::uint64_t v) {
  std::ostringstream ss;
  ss << "0x" << std::hex << v;
  return ss.str();
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  if (v.rfind("0x", 0) == 0 || v.rfind("0X", 0) == 0) {
    std::uint64_t out = 0;
    const char* begin = v.data() + 2;
    auto [ptr, ec] = std::from_chars(begin, v.data() + v.size(), out, 16);
    if (begin == v.data() + v.size() || ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError(key, "bad hexadecimal value '" + v + "'");
    }
    return out;
  }
  return parse_u64(key, v);
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> text;
  std::function<Json(const ExperimentConfig&)> json;
};

template <typename Member>
Field size_field(std::string key, Member member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            std::invoke(member, c) = static_cast<std::size_t>(parse_u64(key, v));
          },
          [member](const ExperimentConfig& c) { return std::to_string(std::invoke(member, c)); },
          [member](const ExperimentConfig& c) { return Json(std::invoke(member, c)); }};
}

template <typename Member>
Field double_field(std::string key, Member member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            std::invoke(member, c) = parse_double(key, v);
          },
          [member](const ExperimentConfig& c) { return io::format_double(std::invoke(member, c)); },
          [member](const ExperimentConfig& c) { return Json(std::invoke(member, c)); }};
}

Field weights_field(std::string key, std::vector<double> ExperimentConfig::*member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            c.*member = parse_weights(key, v);
          },
          [member](const ExperimentConfig& c) { return weights_text(c.*member); },
          [member](const ExperimentConfig& c) { return Json(c.*member); }};
}

Field seed_field(std::string key, std::uint64_t ExperimentConfig::*member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_seed(key, v); },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member](const ExperimentConfig& c) { return Json(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(seed_field("seed", &ExperimentConfig::seed));
    f.push_back(weights_field("pretrain_weights", &ExperimentConfig::pretrain_weights));
    f.push_back(weights_field("target_weights", &ExperimentConfig::target_weights));
    f.push_back(size_field("target_samples", &ExperimentConfig::target_samples));
    f.push_back(size_field("classifier_samples", &ExperimentConfig::classifier_samples));
    f.push_back(size_field("classifier_epochs", &ExperimentConfig::classifier_epochs));
    f.push_back(double_field("classifier_lr", &ExperimentConfig::classifier_lr));
    f.push_back(size_field("pretrain_samples", &ExperimentConfig::pretrain_samples));
    f.push_back(size_field("pretrain_steps", &ExperimentConfig::pretrain_steps));
    f.push_back(size_field("pretrain_batch", &ExperimentConfig::pretrain_batch));
    f.push_back(double_field("pretrain_lr", &ExperimentConfig::pretrain_lr));
    f.push_back(size_field("conditions", &ExperimentConfig::conditions));
    f.push_back(double_field("tau", [](auto& c) -> auto& { return c.sdat.tau; }));
    f.push_back(double_field("lambda_reg",
                             [](auto& c) -> auto& { return c.sdat.lambda_reg; }));
    f.push_back(size_field("batch_size",
                           [](auto& c) -> auto& { return c.sdat.batch_size; }));
    f.push_back(size_field("steps", [](auto& c) -> auto& { return c.sdat.steps; }));
    f.push_back(size_field("target_batches", [](auto& c) -> auto& {
      return c.sdat.target_batches;
    }));
    f.push_back(double_field("lr", [](auto& c) -> auto& { return c.sdat.lr; }));
    f.push_back({"confidence_source",
                 [](ExperimentConfig& c, const std::string& v) {
                   try {
                     c.sdat.confidence_source = core::parse_confidence_source(v);
                   } catch (const ArgumentError& e) {
                     throw ConfigError("confidence_source", e.what());
                   }
                 },
                 [](const ExperimentConfig& c) { return core::to_string(c.sdat.confidence_source); },
                 [](const ExperimentConfig& c) { return Json(core::to_string(c.sdat.confidence_source)); }});
    f.push_back({"counting",
                 [](ExperimentConfig& c, const std::string& v) {
                   try {
                     c.counting = fairness::parse_counting_mode(v);
                   } catch (const ArgumentError& e) {
                     throw ConfigError("counting", e.what());
                   }
                 },
                 [](const ExperimentConfig& c) { return fairness::to_string(c.counting); },
                 [](const ExperimentConfig& c) { return Json(fairness::to_string(c.counting)); }});
    f.push_back(size_field("eval_samples", &ExperimentConfig::eval_samples));
    f.push_back(size_field("eval_every", &ExperimentConfig::eval_every));
    f.push_back(size_field("probe_samples", &ExperimentConfig::probe_samples));
    f.push_back({"embedder_seed",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.embedder_seed = parse_seed("embedder_seed", v);
                 },
                 [](const ExperimentConfig& c) { return hex_u64(c.embedder_seed); },
                 [](const ExperimentConfig& c) { return Json(hex_u64(c.embedder_seed)); }});
    f.push_back({"emit_svg",
                 [](ExperimentConfig& c, const std::string& v) { c.emit_svg = parse_bool("emit_svg", v); },
                 [](const ExperimentConfig& c) { return std::string(c.emit_svg ? "true" : "false"); },
                 [](const ExperimentConfig& c) { return Json(c.emit_svg); }});
    f.push_back({"out_dir",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v.empty()) throw ConfigError("out_dir", "must not be empty");
                   c.out_dir = v;
                 },
                 [](const ExperimentConfig& c) { return c.out_dir; },
                 [](const ExperimentConfig& c) { return Json(c.out_dir); }});
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError(key, "unknown configuration key");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, value);
}

void ExperimentConfig::validate() const {
  auto positive = [](const char* key, std::size_t v) {
    if (v == 0) throw ConfigError(key, "must be at least 1");
  };
  positive("target_samples", target_samples);
  positive("classifier_samples", classifier_samples);
  positive("pretrain_samples", pretrain_samples);
  positive("pretrain_batch", pretrain_batch);
  positive("conditions", conditions);
  positive("eval_samples", eval_samples);
  positive("probe_samples", probe_samples);
  positive("steps", sdat.steps);
  if (target_samples < 2) throw ConfigError("target_samples", "must be at least 2");
  if (classifier_samples < 8) throw ConfigError("classifier_samples", "must be at least 8");
  if (pretrain_samples < 2) throw ConfigError("pretrain_samples", "must be at least 2");
  if (!(classifier_lr > 0.0)) throw ConfigError("classifier_lr", "must be positive");
  if (!(pretrain_lr > 0.0)) throw ConfigError("pretrain_lr", "must be positive");
  if (!(sdat.tau >= 0.0)) throw ConfigError("tau", "must be >= 0");
  if (!(sdat.lambda_reg >= 0.0)) throw ConfigError("lambda_reg", "must be >= 0");
  if (sdat.batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (sdat.target_batches < 1) throw ConfigError("target_batches", "must be at least 1");
  if (!(sdat.lr > 0.0)) throw ConfigError("lr", "must be positive");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "key given more than once");
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const FormatError&) {
    throw ConfigError("", "cannot read config file " + path.string());
  }
  return parse(text);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.text(*this));
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  Json out = Json::object();
  for (const auto& f : fields()) out[f.key] = f.json(*this);
  return out;
}

std::string ExperimentConfig::subset_text(const std::vector<std::string>& keys) const {
  std::string out;
  for (const auto& k : keys) out += k + " = " + field(k).text(*this) + "\n";
  return out;
}

}  // namespace sdat::pipeline
