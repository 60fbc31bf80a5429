#include "sdat/io/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sdat/errors.hpp"

namespace sdat::io {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("cannot format number");
  return std::string(buf, end);
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_field(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw FormatError("line " + std::to_string(line) + ": '" + field + "' is not a number");
  }
  return v;
}

}  // namespace

numerics::Tensor parse_csv_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<double> data;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      data.push_back(parse_field(trim(std::string_view(body).substr(
                                     start, comma == std::string::npos ? std::string::npos
                                                                       : comma - start)),
                                 line_no));
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " fields, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("CSV contains no data rows");
  return numerics::Tensor({rows, cols}, std::move(data));
}

numerics::Tensor read_csv_matrix(const std::filesystem::path& path) {
  try {
    return parse_csv_matrix(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string matrix_csv(const numerics::Tensor& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m.at(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string points_csv(const numerics::Tensor& points, std::span<const std::size_t> labels) {
  if (!labels.empty() && labels.size() != points.rows()) {
    throw ShapeError("points_csv: label count does not match points");
  }
  std::string out = labels.empty() ? "x,y\n" : "x,y,label\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out += format_double(points.at(i, 0));
    out += ',';
    out += format_double(points.at(i, 1));
    if (!labels.empty()) {
      out += ',';
      out += std::to_string(labels[i]);
    }
    out += '\n';
  }
  return out;
}

std::string dataset_csv(const testbed::TargetDataset& dataset) {
  return points_csv(dataset.samples, dataset.labels);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sdat::io
