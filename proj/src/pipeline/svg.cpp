#include "sdat/pipeline/svg.hpp"

#include <algorithm>
#include <cstdio>

#include "sdat/errors.hpp"

namespace sdat::pipeline {

namespace {

constexpr double kWidth = 500.0;
constexpr double kHeight = 300.0;
constexpr double kXMin = -5.0, kXMax = 5.0, kYMin = -3.0, kYMax = 3.0;
const char* const kColours[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string scatter_svg(const numerics::Tensor& points, std::span<const std::size_t> labels,
                        const std::string& title) {
  if (points.shape().size() != 2 || points.cols() != 2) throw ShapeError("scatter_svg: points must be [n, 2]");
  if (!labels.empty() && labels.size() != points.rows()) {
    throw ShapeError("scatter_svg: one label per point expected");
  }
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\">\n",
                kWidth, kHeight + 24.0);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"8\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">" + escape(title) +
         "</text>\n<g transform=\"translate(0,24)\">\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"0\" x2=\"%g\" y2=\"%g\" stroke=\"#ccc\"/>\n", kWidth / 2,
                kWidth / 2, kHeight);
  out += buf;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double x = std::clamp(points.at(i, 0), kXMin, kXMax);
    const double y = std::clamp(points.at(i, 1), kYMin, kYMax);
    const double px = (x - kXMin) / (kXMax - kXMin) * kWidth;
    const double py = (kYMax - y) / (kYMax - kYMin) * kHeight;
    const std::size_t label = labels.empty() ? 0 : labels[i];
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.6\" fill=\"%s\" fill-opacity=\"0.6\"/>\n",
                  px, py, kColours[label % std::size(kColours)]);
    out += buf;
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace sdat::pipeline
