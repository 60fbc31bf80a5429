#include "sdat/io/param_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sdat/errors.hpp"

namespace sdat::io {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'A', 'T', 'P', 'R', 'M', '\0'};

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw FormatError("string too long");
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("parameter file is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t{in_[pos_++]} << (8 * b);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= std::uint64_t{in_[pos_++]} << (8 * b);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void require_kind(const ParamFile& file, const std::string& kind) {
  const std::string& actual = file.meta("kind");
  if (actual != kind) {
    throw FormatError("expected a " + kind + " file, found kind '" + actual + "'");
  }
}

std::size_t parse_size(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw FormatError("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError(std::string("bad integer metadata for ") + what + ": '" + text + "'");
  }
}

}  // namespace

const std::string& ParamFile::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  throw FormatError("parameter file lacks metadata key '" + key + "'");
}

bool ParamFile::has_meta(const std::string& key) const {
  for (const auto& entry : metadata) {
    if (entry.first == key) return true;
  }
  return false;
}

const numerics::Tensor& ParamFile::tensor(const std::string& name) const {
  for (const auto& [k, t] : tensors) {
    if (k == name) return t;
  }
  throw FormatError("parameter file lacks tensor '" + name + "'");
}

std::vector<std::uint8_t> encode(const ParamFile& file) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kParamFileVersion);
  w.u32(static_cast<std::uint32_t>(file.metadata.size()));
  for (const auto& [k, v] : file.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(file.tensors.size()));
  for (const auto& [name, t] : file.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
  }
  for (const auto& entry : file.tensors) {
    for (double v : entry.second.values()) w.f64(v);
  }
  const std::uint64_t sum = fnv1a(w.bytes());
  w.u64(sum);
  return std::move(w.bytes());
}

ParamFile decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not an SDAT parameter file (bad magic)");
  }
  const auto body = bytes.first(bytes.size() - 8);
  Reader tail(bytes.subspan(bytes.size() - 8));
  if (fnv1a(body) != tail.u64()) throw FormatError("parameter file checksum mismatch");

  Reader r(body);
  r.skip(sizeof kMagic);
  const std::uint32_t version = r.u32();
  if (version != kParamFileVersion) {
    throw FormatError("unsupported parameter file version " + std::to_string(version));
  }
  ParamFile file;
  const std::uint32_t meta_count = r.u32();
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    file.metadata.emplace_back(std::move(k), std::move(v));
  }
  const std::uint32_t count = r.u32();
  std::vector<std::pair<std::string, std::vector<std::size_t>>> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("tensor '" + name + "' has implausible rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
    table.emplace_back(std::move(name), std::move(shape));
  }
  for (auto& [name, shape] : table) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d != 0 && n > r.remaining() / 8 / d) throw FormatError("parameter file is truncated");
      n *= d;
    }
    r.need(n * 8);
    std::vector<double> data(n);
    for (double& v : data) v = r.f64();
    file.tensors.emplace_back(std::move(name), numerics::Tensor(std::move(shape), std::move(data)));
  }
  if (r.remaining() != 0) throw FormatError("parameter file has trailing bytes");
  return file;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_param_file(const std::filesystem::path& path, const ParamFile& file) {
  write_bytes(path, encode(file));
}

ParamFile read_param_file(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ParamFile to_param_file(const numerics::MlpParams& params, const std::string& kind) {
  params.validate();
  ParamFile file;
  file.metadata = {{"kind", kind}, {"layers", std::to_string(params.layers.size())}};
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    file.tensors.emplace_back(prefix + ".weight", params.layers[l].weight);
    file.tensors.emplace_back(prefix + ".bias", params.layers[l].bias);
  }
  return file;
}

numerics::MlpParams mlp_from(const ParamFile& file, const std::string& kind) {
  require_kind(file, kind);
  const std::size_t layers = parse_size(file.meta("layers"), "layers");
  numerics::MlpParams params;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    params.layers.push_back({file.tensor(prefix + ".weight"), file.tensor(prefix + ".bias")});
  }
  try {
    params.validate();
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent network in file: ") + e.what());
  }
  return params;
}

ParamFile to_param_file(const testbed::Generator& generator) {
  ParamFile file = to_param_file(generator.params, "generator");
  file.metadata.emplace_back("noise_dim", std::to_string(generator.noise_dim));
  file.metadata.emplace_back("conditions", std::to_string(generator.conditions));
  return file;
}

testbed::Generator generator_from(const ParamFile& file) {
  testbed::Generator gen;
  gen.params = mlp_from(file, "generator");
  gen.noise_dim = parse_size(file.meta("noise_dim"), "noise_dim");
  gen.conditions = parse_size(file.meta("conditions"), "conditions");
  try {
    gen.validate();
  } catch (const ShapeError& e) {
    throw FormatError(std::string("inconsistent generator in file: ") + e.what());
  }
  return gen;
}

ParamFile to_param_file(const testbed::TargetDataset& dataset) {
  ParamFile file;
  file.metadata = {{"kind", "dataset"}};
  std::vector<double> labels(dataset.labels.begin(), dataset.labels.end());
  const std::size_t n = labels.size();
  file.tensors.emplace_back("samples", dataset.samples);
  file.tensors.emplace_back("labels", numerics::Tensor({n}, std::move(labels)));
  file.tensors.emplace_back(
      "declared_weights",
      numerics::Tensor({dataset.declared_weights.size()}, dataset.declared_weights));
  return file;
}

testbed::TargetDataset dataset_from(const ParamFile& file) {
  require_kind(file, "dataset");
  testbed::TargetDataset ds;
  ds.samples = file.tensor("samples");
  const auto& labels = file.tensor("labels");
  const auto& weights = file.tensor("declared_weights");
  if (ds.samples.rank() != 2 || labels.rank() != 1 || labels.size() != ds.samples.rows()) {
    throw FormatError("dataset file: samples and labels disagree");
  }
  ds.declared_weights.assign(weights.values().begin(), weights.values().end());
  for (double v : labels.values()) {
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)) ||
        v >= static_cast<double>(ds.declared_weights.size())) {
      throw FormatError("dataset file: invalid label value");
    }
    ds.labels.push_back(static_cast<std::size_t>(v));
  }
  return ds;
}

}  // namespace sdat::io
