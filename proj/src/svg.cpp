#include "fmqa/svg.hpp"

#include <cmath>
#include <cstdio>

namespace fmqa {

namespace {

std::string num(double v) {
  char text[32];
  std::snprintf(text, sizeof text, "%.2f", v);
  return text;
}

std::string points_attr(const std::vector<std::pair<double, double>>& points) {
  std::string out;
  for (const auto& [x, y] : points) {
    if (!out.empty()) out += ' ';
    out += num(x) + ',' + num(y);
  }
  return out;
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::rect(double x, double y, double w, double h, const std::string& fill, double opacity) {
  body_ += "  <rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"" + fill + "\"";
  if (opacity < 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
  body_ += "/>\n";
}

void SvgDocument::line(double x1, double y1, double x2, double y2, const std::string& stroke, double width) {
  body_ += "  <line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"/>\n";
}

void SvgDocument::polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke,
                           double width) {
  body_ += "  <polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\" points=\"" +
           points_attr(points) + "\"/>\n";
}

void SvgDocument::polygon(const std::vector<std::pair<double, double>>& points, const std::string& fill) {
  body_ += "  <polygon fill=\"" + fill + "\" stroke=\"none\" points=\"" + points_attr(points) + "\"/>\n";
}

void SvgDocument::text(double x, double y, const std::string& content, double size, const std::string& anchor) {
  body_ += "  <text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" + num(size) +
           "\" text-anchor=\"" + anchor + "\">" + xml_escape(content) + "</text>\n";
}

std::string SvgDocument::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + ' ' + num(height_) +
         "\">\n  <rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
         "\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

double PlotFrame::px(double x) const {
  const double span = x_max > x_min ? x_max - x_min : 1.0;
  return left + (x - x_min) / span * (width - left - right);
}

double PlotFrame::py(double y) const {
  const double span = y_max > y_min ? y_max - y_min : 1.0;
  return height - bottom - (y - y_min) / span * (height - top - bottom);
}

std::vector<double> nice_ticks(double lo, double hi) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / 4.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = f * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
  return out;
}

void PlotFrame::draw_axes(SvgDocument& svg, const std::string& x_label, const std::string& y_label) const {
  const double x0 = px(x_min), x1 = px(x_max), y0 = py(y_min), y1 = py(y_max);
  svg.line(x0, y0, x1, y0, "black");
  svg.line(x0, y0, x0, y1, "black");
  char label[32];
  for (double t : nice_ticks(x_min, x_max)) {
    svg.line(px(t), y0, px(t), y0 + 5, "black");
    std::snprintf(label, sizeof label, "%g", t);
    svg.text(px(t), y0 + 18, label, 11, "middle");
  }
  for (double t : nice_ticks(y_min, y_max)) {
    svg.line(x0 - 5, py(t), x0, py(t), "black");
    std::snprintf(label, sizeof label, "%g", t);
    svg.text(x0 - 8, py(t) + 4, label, 11, "end");
  }
  svg.text((x0 + x1) / 2, height - 12, x_label, 13, "middle");
  svg.text(16, (y0 + y1) / 2, y_label, 13, "middle");
}

}  // namespace fmqa
