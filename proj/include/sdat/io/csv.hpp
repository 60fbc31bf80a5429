#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sdat/numerics/tensor.hpp"
#include "sdat/testbed/population.hpp"

namespace sdat::io {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Numeric CSV: one row per line, comma separated. Blank lines and lines
// starting with '#' are skipped. Throws FormatError with the line number for
// non-numeric fields or ragged rows.
numerics::Tensor parse_csv_matrix(const std::string& text);
numerics::Tensor read_csv_matrix(const std::filesystem::path& path);

std::string matrix_csv(const numerics::Tensor& m);

// "x,y,label" rows. `labels` may be empty, in which case the column is omitted.
std::string points_csv(const numerics::Tensor& points, std::span<const std::size_t> labels);
std::string dataset_csv(const testbed::TargetDataset& dataset);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace sdat::io
