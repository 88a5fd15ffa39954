#include "coralfit/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace coralfit::svg {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
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
  void finish(double fixed_lo, double fixed_hi) {
    if (fixed_lo != fixed_hi) {
      lo = fixed_lo;
      hi = fixed_hi;
      return;
    }
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

// Roughly five ticks on a 1/2/5 step.
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) {
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::string palette(std::size_t i) {
  static const std::array<const char*, 8> colors{"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#8c564b",
                                                 "#e377c2", "#17becf"};
  return colors[i % colors.size()];
}

std::string Chart::render_panel(double left, double top, double width,
                                double height) const {
  Range xr, yr;
  for (const auto& c : curves) {
    for (double v : c.x) xr.add(v);
    for (double v : c.y) yr.add(v);
  }
  for (const auto& b : bands) {
    for (double v : b.x) xr.add(v);
    for (double v : b.lo) yr.add(v);
    for (double v : b.hi) yr.add(v);
  }
  for (const auto& p : points) {
    for (double v : p.x) xr.add(v);
    for (double v : p.y) yr.add(v);
  }
  for (const auto& b : bars) {
    for (double v : b.edges) xr.add(v);
    yr.add(0.0);
    for (double v : b.heights) yr.add(v);
  }
  xr.finish(x_min, x_max);
  yr.finish(y_min, y_max);

  const double ml = 55, mr = 15, mt = 28, mb = 40;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto X = [&](double v) { return left + ml + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double v) { return top + mt + (1.0 - (v - yr.lo) / (yr.hi - yr.lo)) * ph; };

  std::ostringstream s;
  s << "<g>\n";
  if (!title.empty()) {
    s << "<text x=\"" << num(left + ml + pw / 2) << "\" y=\"" << num(top + 18)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(title) << "</text>\n";
  }
  for (const auto& b : bands) {
    s << "<polygon fill=\"" << b.color << "\" fill-opacity=\"" << num(b.opacity)
      << "\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i) s << num(X(b.x[i])) << ',' << num(Y(b.hi[i])) << ' ';
    for (std::size_t i = b.x.size(); i-- > 0;) s << num(X(b.x[i])) << ',' << num(Y(b.lo[i])) << ' ';
    s << "\"/>\n";
  }
  for (const auto& b : bars) {
    for (std::size_t i = 0; i < b.heights.size(); ++i) {
      const double x0 = X(b.edges[i]), x1 = X(b.edges[i + 1]);
      const double y1 = Y(b.heights[i]), y0 = Y(0.0);
      s << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\""
        << num(std::max(0.0, x1 - x0)) << "\" height=\"" << num(std::max(0.0, y0 - y1))
        << "\" fill=\"" << b.color << "\"/>\n";
    }
  }
  for (const auto& c : curves) {
    if (c.x.empty()) continue;
    s << "<path fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"" << num(c.width)
      << "\"" << (c.dashed ? " stroke-dasharray=\"5,4\"" : "") << " d=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      s << (i == 0 ? 'M' : 'L') << num(X(c.x[i])) << ',' << num(Y(c.y[i])) << ' ';
    }
    s << "\"";
    if (!c.label.empty()) s << "><title>" << escape(c.label) << "</title></path>\n";
    else s << "/>\n";
  }
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      s << "<circle cx=\"" << num(X(p.x[i])) << "\" cy=\"" << num(Y(p.y[i])) << "\" r=\""
        << num(p.radius) << "\" fill=\"" << p.color << "\"/>\n";
    }
  }

  // axes
  const double ax = left + ml, ay = top + mt + ph;
  s << "<line x1=\"" << num(ax) << "\" y1=\"" << num(ay) << "\" x2=\"" << num(ax + pw)
    << "\" y2=\"" << num(ay) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << num(ax) << "\" y1=\"" << num(top + mt) << "\" x2=\"" << num(ax)
    << "\" y2=\"" << num(ay) << "\" stroke=\"black\"/>\n";
  for (double t : ticks(xr.lo, xr.hi)) {
    s << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(ay) << "\" x2=\"" << num(X(t))
      << "\" y2=\"" << num(ay + 4) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << num(X(t)) << "\" y=\"" << num(ay + 16)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(t) << "</text>\n";
  }
  for (double t : ticks(yr.lo, yr.hi)) {
    s << "<line x1=\"" << num(ax - 4) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << num(ax)
      << "\" y2=\"" << num(Y(t)) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << num(ax - 6) << "\" y=\"" << num(Y(t) + 3)
      << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(t) << "</text>\n";
  }
  if (!x_label.empty()) {
    s << "<text x=\"" << num(ax + pw / 2) << "\" y=\"" << num(top + height - 6)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(x_label) << "</text>\n";
  }
  if (!y_label.empty()) {
    const double cx = left + 12, cy = top + mt + ph / 2;
    s << "<text x=\"" << num(cx) << "\" y=\"" << num(cy) << "\" transform=\"rotate(-90 "
      << num(cx) << ' ' << num(cy) << ")\" text-anchor=\"middle\" font-size=\"11\">"
      << escape(y_label) << "</text>\n";
  }
  s << "</g>\n";
  return s.str();
}

std::string Chart::render(double width, double height) const {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
    << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << render_panel(0, 0, width, height) << "</svg>\n";
  return s.str();
}

std::string render_grid(const std::vector<Chart>& charts, int columns,
                        double panel_width, double panel_height) {
  const int cols = std::max(1, columns);
  const int rows = static_cast<int>((charts.size() + cols - 1) / cols);
  const double W = panel_width * cols, H = panel_height * std::max(rows, 1);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\""
    << num(H) << "\" viewBox=\"0 0 " << num(W) << ' ' << num(H) << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < charts.size(); ++i) {
    const int r = static_cast<int>(i) / cols, c = static_cast<int>(i) % cols;
    s << charts[i].render_panel(c * panel_width, r * panel_height, panel_width, panel_height);
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace coralfit::svg
