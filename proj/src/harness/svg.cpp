#include "fibdim/svg.hpp"

#include "fibdim/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace fibdim {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(const std::string& title, Range x, Range y) : x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
         << "</text>\n";
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  void axes(const std::string& x_label, const std::string& y_label, bool x_ticks) {
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom;
    const double y1 = kTop;
    out_ << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
         << num(y0 - y1) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double yv = y_.lo + (y_.hi - y_.lo) * k / 4.0;
      out_ << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
           << "</text>\n";
      if (x_ticks) {
        const double xv = x_.lo + (x_.hi - x_.lo) * k / 4.0;
        out_ << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(y0 + 16) << "\" text-anchor=\"middle\">" << tick(xv)
             << "</text>\n";
      }
    }
    out_ << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 12)
         << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
    out_ << "<text x=\"16\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
         << num((y0 + y1) / 2) << ")\">" << escape(y_label) << "</text>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& items, bool right = false) {
    double y = kTop + 14;
    const double x = right ? kWidth - kRight - 170 : kLeft + 10;
    for (const auto& [label, color] : items) {
      out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
           << color << "\"/>\n<text x=\"" << num(x + 16) << "\" y=\"" << num(y) << "\">" << escape(label)
           << "</text>\n";
      y += 16;
    }
  }

  std::ostringstream& raw() { return out_; }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  Range x_;
  Range y_;
  std::ostringstream out_;
};

}  // namespace

std::string render_svg(const XyPlot& plot) {
  Range xr;
  Range yr;
  for (const auto& s : plot.series) {
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) {
        xr.add(s.x[k]);
        yr.add(s.y[k]);
      }
    }
  }
  xr.finish();
  yr.finish();
  Canvas c(plot.title, xr, yr);
  c.axes(plot.x_label, plot.y_label, true);
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& s : plot.series) {
    items.emplace_back(s.label, s.color);
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.line) {
      c.raw() << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < n; ++k) {
        if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) c.raw() << num(c.px(s.x[k])) << "," << num(c.py(s.y[k])) << " ";
      }
      c.raw() << "\"/>\n";
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
        c.raw() << "<circle cx=\"" << num(c.px(s.x[k])) << "\" cy=\"" << num(c.py(s.y[k])) << "\" r=\"1.8\" fill=\""
                << s.color << "\" fill-opacity=\"0.5\"/>\n";
      }
    }
  }
  c.legend(items, plot.legend_right);
  return c.finish();
}

std::string render_svg(const BarChart& chart) {
  Range xr;
  xr.lo = 0.0;
  xr.hi = static_cast<double>(std::max<std::size_t>(chart.categories.size(), 1));
  Range yr;
  yr.add(0.0);
  for (std::size_t g = 0; g < chart.values.size(); ++g) {
    for (std::size_t s = 0; s < chart.values[g].size(); ++s) {
      const double e = g < chart.errors.size() && s < chart.errors[g].size() ? chart.errors[g][s] : 0.0;
      yr.add(chart.values[g][s] + (std::isfinite(e) ? e : 0.0));
      yr.add(chart.values[g][s] - (std::isfinite(e) ? e : 0.0));
    }
  }
  yr.finish();
  Canvas c(chart.title, xr, yr);
  c.axes("", chart.y_label, false);
  const double zero = c.py(0.0);
  const std::size_t ns = std::max<std::size_t>(chart.series.size(), 1);
  for (std::size_t g = 0; g < chart.values.size(); ++g) {
    const double left = c.px(static_cast<double>(g) + 0.15);
    const double width = (c.px(static_cast<double>(g) + 0.85) - left) / static_cast<double>(ns);
    if (g < chart.categories.size()) {
      c.raw() << "<text x=\"" << num(c.px(static_cast<double>(g) + 0.5)) << "\" y=\"" << num(kHeight - kBottom + 16)
              << "\" text-anchor=\"middle\">" << escape(chart.categories[g]) << "</text>\n";
    }
    for (std::size_t s = 0; s < chart.values[g].size(); ++s) {
      const double v = chart.values[g][s];
      if (!std::isfinite(v)) continue;
      const double top = std::min(c.py(v), zero);
      const double x = left + width * static_cast<double>(s);
      const std::string color = s < chart.colors.size() ? chart.colors[s] : "#888";
      c.raw() << "<rect x=\"" << num(x + 2) << "\" y=\"" << num(top) << "\" width=\"" << num(width - 4)
              << "\" height=\"" << num(std::fabs(c.py(v) - zero)) << "\" fill=\"" << color << "\"/>\n";
      const double e = g < chart.errors.size() && s < chart.errors[g].size() ? chart.errors[g][s] : 0.0;
      if (std::isfinite(e) && e > 0.0) {
        const double mid = x + width / 2;
        c.raw() << "<line x1=\"" << num(mid) << "\" x2=\"" << num(mid) << "\" y1=\"" << num(c.py(v - e))
                << "\" y2=\"" << num(c.py(v + e)) << "\" stroke=\"black\"/>\n";
      }
    }
  }
  std::vector<std::pair<std::string, std::string>> items;
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    items.emplace_back(chart.series[s], s < chart.colors.size() ? chart.colors[s] : "#888");
  }
  c.legend(items);
  return c.finish();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  out.close();
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace fibdim
