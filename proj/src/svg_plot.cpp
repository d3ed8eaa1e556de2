#include "krf/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace krf {

namespace {

const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

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

std::string render_svg(const LogLogPlot& plot, int width, int height) {
  const double left = 70, right = 170, top = 36, bottom = 48;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& l : plot.lines)
    for (std::size_t i = 0; i < std::min(l.x.size(), l.y.size()); ++i)
      if (l.x[i] > 0 && l.y[i] > 0 && std::isfinite(l.y[i])) {
        xmin = std::min(xmin, std::log10(l.x[i]));
        xmax = std::max(xmax, std::log10(l.x[i]));
        ymin = std::min(ymin, std::log10(l.y[i]));
        ymax = std::max(ymax, std::log10(l.y[i]));
      }
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
      width, height, width / 2, escape(plot.title));
  const double pw = width - left - right, ph = height - top - bottom;
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left,
                     top, pw, ph);
  if (!std::isfinite(xmin)) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no positive data</text>\n</svg>\n",
                       left + pw / 2, top + ph / 2);
    return svg;
  }
  if (xmax - xmin < 1e-9) xmax = xmin + 1;
  if (ymax - ymin < 1e-9) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double lx) {
    const double f = (lx - xmin) / (xmax - xmin);
    return left + (plot.reverse_x ? 1.0 - f : f) * pw;
  };
  auto py = [&](double ly) { return top + (1.0 - (ly - ymin) / (ymax - ymin)) * ph; };

  for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); ++d)
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1}\" x2=\"{0:.1f}\" y2=\"{2}\" stroke=\"#ddd\"/>"
        "<text x=\"{0:.1f}\" y=\"{3}\" text-anchor=\"middle\">1e{4}</text>\n",
        px(d), top, top + ph, top + ph + 16, d);
  const double ystep = std::max(1.0, std::ceil((ymax - ymin) / 8.0));
  for (double d = std::ceil(ymin); d <= ymax; d += ystep)
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>"
        "<text x=\"{3}\" y=\"{4:.1f}\" text-anchor=\"end\">1e{5}</text>\n",
        left, py(d), left + pw, left - 6, py(d) + 4, static_cast<int>(d));
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, height - 10,
                     escape(plot.x_label));
  svg += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                     top + ph / 2, escape(plot.y_label));

  int k = 0;
  for (const auto& l : plot.lines) {
    const char* colour = kColours[k % 6];
    std::string pts;
    for (std::size_t i = 0; i < std::min(l.x.size(), l.y.size()); ++i)
      if (l.x[i] > 0 && l.y[i] > 0 && std::isfinite(l.y[i]))
        pts += fmt::format("{:.2f},{:.2f} ", px(std::log10(l.x[i])), py(std::log10(l.y[i])));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{} points=\"{}\"/>\n", colour,
                       l.dashed ? " stroke-dasharray=\"6 4\"" : "", pts);
    const double ly = top + 14 + 18 * k;
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"{4}/>"
        "<text x=\"{5}\" y=\"{6}\">{7}</text>\n",
        left + pw + 10, ly, left + pw + 34, colour, l.dashed ? " stroke-dasharray=\"6 4\"" : "", left + pw + 40,
        ly + 4, escape(l.label));
    ++k;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace krf
