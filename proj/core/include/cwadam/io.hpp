#pragma once

// CSV cells at 17 significant digits and a small SVG plotter.

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace cwadam {

std::string csv_cell(double value);
std::string csv_cell(std::int64_t value);
std::string csv_cell(std::uint64_t value);
std::string csv_cell(int value);
std::string csv_cell(bool value);
std::string csv_cell(const std::string& value);
std::string csv_cell(const char* value);

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

template <typename... Ts>
void csv_row(std::ostream& os, const Ts&... values) {
  write_csv_row(os, {csv_cell(values)...});
}

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool scatter = false;
};

struct HorizontalRule {
  std::string label;
  double y = 0.0;
  std::string color = "#d62728";
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
  std::vector<HorizontalRule> rules;
  int width = 640;
  int height = 420;
};

// Non-positive values are dropped on log axes.
std::string render_svg(const Plot& plot);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace cwadam
