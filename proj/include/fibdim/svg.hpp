#pragma once

#include <string>
#include <vector>

namespace fibdim {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = false;  // polyline instead of dots
  std::string color = "#1f77b4";
};

struct XyPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool legend_right = false;  // top-right legend, for falling data
};

// One group of bars per category, one bar per series, optional error bars.
struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<std::string> series;
  std::vector<std::string> colors;
  std::vector<std::vector<double>> values;  // [category][series], NaN = no bar
  std::vector<std::vector<double>> errors;  // same shape, may be empty
};

// Self-contained SVG documents. Non-finite points are dropped.
std::string render_svg(const XyPlot& plot);
std::string render_svg(const BarChart& chart);

// Writes text to a file, throwing Error(Io) with the path on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fibdim
