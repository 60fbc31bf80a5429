#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdat/numerics/mlp.hpp"
#include "sdat/numerics/tensor.hpp"
#include "sdat/testbed/generator.hpp"
#include "sdat/testbed/population.hpp"

namespace sdat::io {

// Binary container for parameters and datasets. All integers and doubles are
// little-endian; doubles are stored as raw IEEE-754 bits, so a round trip is
// bit-exact.
//
//   magic      8 bytes  "SDATPRM\0"
//   version    u32      kParamFileVersion
//   meta_count u32      then per entry: u32 len, key bytes, u32 len, value bytes
//   count      u32      then the shape table, per tensor:
//                         u32 len, name bytes, u32 rank, u64 dim[rank]
//   payload             per tensor in table order: f64 values, row-major
//   checksum   u64      FNV-1a of every preceding byte
inline constexpr std::uint32_t kParamFileVersion = 1;

struct ParamFile {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, numerics::Tensor>> tensors;

  // Throw FormatError when absent.
  const std::string& meta(const std::string& key) const;
  const numerics::Tensor& tensor(const std::string& name) const;
  bool has_meta(const std::string& key) const;
};

std::vector<std::uint8_t> encode(const ParamFile& file);
// Throws FormatError on bad magic, unsupported version, truncation, trailing
// bytes or checksum mismatch.
ParamFile decode(std::span<const std::uint8_t> bytes);

void write_param_file(const std::filesystem::path& path, const ParamFile& file);
ParamFile read_param_file(const std::filesystem::path& path);

// Typed views. The "kind" metadata entry guards against loading, say, a
// classifier where a generator is expected.
ParamFile to_param_file(const numerics::MlpParams& params, const std::string& kind);
numerics::MlpParams mlp_from(const ParamFile& file, const std::string& kind);

ParamFile to_param_file(const testbed::Generator& generator);
testbed::Generator generator_from(const ParamFile& file);

ParamFile to_param_file(const testbed::TargetDataset& dataset);
testbed::TargetDataset dataset_from(const ParamFile& file);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sdat::io
