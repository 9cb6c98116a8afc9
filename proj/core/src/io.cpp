#include "cwadam/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cwadam {

std::string csv_cell(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_cell(std::int64_t value) { return std::to_string(value); }
std::string csv_cell(std::uint64_t value) { return std::to_string(value); }
std::string csv_cell(int value) { return std::to_string(value); }
std::string csv_cell(bool value) { return value ? "1" : "0"; }

std::string csv_cell(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string csv_cell(const char* value) { return csv_cell(std::string(value)); }

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

namespace {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const {
    const double a = log ? std::log10(v) : v;
    return (a - lo) / (hi - lo);
  }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

Axis make_axis(const std::vector<double>& values, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!usable(v, log)) continue;
    const double a = log ? std::log10(v) : v;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.04 * (hi - lo);
  return {lo - pad, hi + pad, log};
}

std::string tick_label(double a, bool log) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", log ? std::pow(10.0, a) : a);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Plot& plot) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& s : plot.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  for (const auto& r : plot.rules) ys.push_back(r.y);
  const Axis ax = make_axis(xs, plot.log_x);
  const Axis ay = make_axis(ys, plot.log_y);

  const double left = 70, right = 20, top = 40, bottom = 50;
  const double w = plot.width - left - right;
  const double h = plot.height - top - bottom;
  auto px = [&](double v) { return left + ax.map(v) * w; };
  auto py = [&](double v) { return top + (1.0 - ay.map(v)) * h; };

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
     << plot.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << plot.width / 2.0 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 4; ++k) {
    const double fx = ax.lo + (ax.hi - ax.lo) * k / 4.0;
    const double fy = ay.lo + (ay.hi - ay.lo) * k / 4.0;
    const double sx = left + w * k / 4.0;
    const double sy = top + h * (1.0 - k / 4.0);
    os << "<text x=\"" << sx << "\" y=\"" << top + h + 16 << "\" text-anchor=\"middle\">"
       << tick_label(fx, ax.log) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
       << tick_label(fy, ay.log) << "</text>\n";
  }
  os << "<text x=\"" << left + w / 2 << "\" y=\"" << plot.height - 10
     << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << top + h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << top + h / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

  for (const auto& r : plot.rules) {
    if (!usable(r.y, plot.log_y)) continue;
    os << "<line x1=\"" << left << "\" x2=\"" << left + w << "\" y1=\"" << py(r.y) << "\" y2=\""
       << py(r.y) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"6 4\"/>\n";
    os << "<text x=\"" << left + w - 4 << "\" y=\"" << py(r.y) - 4 << "\" text-anchor=\"end\" fill=\""
       << r.color << "\">" << escape(r.label) << "</text>\n";
  }

  int legend_row = 0;
  for (const auto& s : plot.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.scatter) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!usable(s.x[k], plot.log_x) || !usable(s.y[k], plot.log_y)) continue;
        os << "<circle cx=\"" << px(s.x[k]) << "\" cy=\"" << py(s.y[k]) << "\" r=\"2\" fill=\""
           << s.color << "\" fill-opacity=\"0.6\"/>\n";
      }
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < n; ++k) {
        if (!usable(s.x[k], plot.log_x) || !usable(s.y[k], plot.log_y)) continue;
        os << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
      }
      os << "\"/>\n";
    }
    if (!s.label.empty()) {
      const double ly = top + 14 + 14 * legend_row++;
      os << "<rect x=\"" << left + 8 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
         << s.color << "\"/>\n";
      os << "<text x=\"" << left + 22 << "\" y=\"" << ly + 1 << "\">" << escape(s.label)
         << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace cwadam
