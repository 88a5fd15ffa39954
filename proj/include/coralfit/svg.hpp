#pragma once

// Minimal static SVG charts. Curves are emitted as <path>, bands as
// <polygon>, bars as <rect>, points as <circle>; axes use <line>.

#include <string>
#include <vector>

namespace coralfit::svg {

struct Curve {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  std::string label;
  double width = 1.5;
  bool dashed = false;
};

struct Band {
  std::vector<double> x;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string color = "#1f77b4";
  double opacity = 0.2;
};

struct Points {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#000000";
  double radius = 2.5;
};

struct Bars {
  std::vector<double> edges;  // size = heights + 1
  std::vector<double> heights;
  std::string color = "#7f7f7f";
};

class Chart {
 public:
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Curve> curves;
  std::vector<Band> bands;
  std::vector<Points> points;
  std::vector<Bars> bars;

  /// Fixed axis ranges; when lo == hi the range is taken from the data.
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;

  /// SVG fragment (a <g>) for a panel of the given size at an offset.
  std::string render_panel(double left, double top, double width,
                           double height) const;
  std::string render(double width = 640, double height = 400) const;
};

/// Panels laid out in a grid, `columns` per row.
std::string render_grid(const std::vector<Chart>& charts, int columns,
                        double panel_width = 320, double panel_height = 240);

/// Categorical colour by index.
std::string palette(std::size_t i);

}  // namespace coralfit::svg
