#pragma once

// Minimal static SVG figures: a grid of panels, each with linear axes and
// line, step, bar or marker series.

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bundlesim::svg {

enum class Style { Line, Bars, Markers };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  Style style = Style::Line;
  std::vector<std::string> point_colors;  // per-point override for markers
  std::vector<double> y_error;            // optional error bars
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
  std::vector<std::string> notes;  // text lines drawn in the upper right
};

struct Figure {
  std::vector<Panel> panels;
  int columns = 2;
  int panel_width = 420;
  int panel_height = 300;
  std::string comment;  // emitted as an XML comment when non-empty
};

std::string render(const Figure& fig);

/// A few distinguishable colors.
const std::string& palette(std::size_t i);

}  // namespace bundlesim::svg
