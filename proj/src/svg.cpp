#include "bundlesim/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace bundlesim::svg {

namespace {

constexpr double kLeft = 62, kRight = 14, kTop = 28, kBottom = 44;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::pair<double, double> data_range(const Panel& p, bool x_axis) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : p.series) {
    const auto& v = x_axis ? s.x : s.y;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) continue;
      const double err = (!x_axis && i < s.y_error.size()) ? s.y_error[i] : 0.0;
      lo = std::min(lo, v[i] - err);
      hi = std::max(hi, v[i] + err);
    }
    if (!x_axis && s.style == Style::Bars) lo = std::min(lo, 0.0);
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

void draw_panel(std::string& out, const Panel& p, double ox, double oy, double w, double h) {
  const auto [x0, x1] = p.x_range.value_or(data_range(p, true));
  const auto [y0, y1] = p.y_range.value_or(data_range(p, false));
  const double pw = w - kLeft - kRight, ph = h - kTop - kBottom;
  auto sx = [&](double x) { return ox + kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return oy + kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  out += fmt::format("<g>\n<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#333\"/>\n",
                     ox + kLeft, oy + kTop, pw, ph);
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                     ox + kLeft + pw / 2, oy + 18, escape(p.title));
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                     ox + kLeft + pw / 2, oy + h - 8, escape(p.x_label));
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 {:.1f} {:.1f})\">{}</text>\n",
      ox + 14, oy + kTop + ph / 2, ox + 14, oy + kTop + ph / 2, escape(p.y_label));
  for (double t : ticks(x0, x1)) {
    out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#333\"/>\n", sx(t),
                       oy + kTop + ph, oy + kTop + ph + 4);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"10\">{:g}</text>\n", sx(t),
                       oy + kTop + ph + 16, t);
  }
  for (double t : ticks(y0, y1)) {
    out += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#333\"/>\n", ox + kLeft - 4,
                       sy(t), ox + kLeft, sy(t));
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\" font-size=\"10\">{:g}</text>\n",
                       ox + kLeft - 6, sy(t) + 3, t);
  }

  out += fmt::format("<clipPath id=\"c{0:.0f}_{1:.0f}\"><rect x=\"{2:.1f}\" y=\"{3:.1f}\" width=\"{4:.1f}\" height=\"{5:.1f}\"/></clipPath>\n",
                     ox, oy, ox + kLeft, oy + kTop, pw, ph);
  out += fmt::format("<g clip-path=\"url(#c{:.0f}_{:.0f})\">\n", ox, oy);
  for (const auto& s : p.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    switch (s.style) {
      case Style::Line: {
        std::string pts;
        for (std::size_t i = 0; i < n; ++i) pts += fmt::format("{:.2f},{:.2f} ", sx(s.x[i]), sy(s.y[i]));
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", s.color, pts);
        break;
      }
      case Style::Bars: {
        double width = pw / std::max<std::size_t>(n, 1) * 0.8;
        if (n > 1) width = std::abs(sx(s.x[1]) - sx(s.x[0])) * 0.8;
        for (std::size_t i = 0; i < n; ++i) {
          const double top = sy(std::max(s.y[i], 0.0)), base = sy(std::max(y0, 0.0));
          out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                             sx(s.x[i]) - width / 2, top, width, std::max(0.0, base - top), s.color);
        }
        break;
      }
      case Style::Markers: {
        for (std::size_t i = 0; i < n; ++i) {
          const auto& c = i < s.point_colors.size() ? s.point_colors[i] : s.color;
          out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", sx(s.x[i]), sy(s.y[i]), c);
        }
        break;
      }
    }
    for (std::size_t i = 0; i < std::min(n, s.y_error.size()); ++i) {
      out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"{3}\"/>\n", sx(s.x[i]),
                         sy(s.y[i] - s.y_error[i]), sy(s.y[i] + s.y_error[i]), s.color);
    }
  }
  out += "</g>\n";

  double ly = oy + kTop + 14;
  for (const auto& s : p.series) {
    if (s.label.empty()) continue;
    out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"10\" height=\"3\" fill=\"{}\"/>\n", ox + kLeft + pw - 90,
                       ly - 4, s.color);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\">{}</text>\n", ox + kLeft + pw - 76, ly,
                       escape(s.label));
    ly += 13;
  }
  for (const auto& note : p.notes) {
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
                       ox + kLeft + pw - 6, ly, escape(note));
    ly += 13;
  }
  out += "</g>\n";
}

}  // namespace

const std::string& palette(std::size_t i) {
  static const std::array<std::string, 6> colors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#555555"};
  return colors[i % colors.size()];
}

std::string render(const Figure& fig) {
  const int cols = std::max(1, fig.columns);
  const auto rows = static_cast<int>((fig.panels.size() + static_cast<std::size_t>(cols) - 1) / static_cast<std::size_t>(cols));
  const int width = cols * fig.panel_width, height = std::max(1, rows) * fig.panel_height;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\">\n",
      width, height);
  if (!fig.comment.empty()) out += fmt::format("<!-- {} -->\n", fig.comment);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
  for (std::size_t i = 0; i < fig.panels.size(); ++i) {
    const auto c = static_cast<int>(i) % cols, r = static_cast<int>(i) / cols;
    draw_panel(out, fig.panels[i], c * fig.panel_width, r * fig.panel_height, fig.panel_width, fig.panel_height);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace bundlesim::svg
