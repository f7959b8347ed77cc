#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fmqa {

/// Minimal SVG document builder; coordinates are in pixels, y pointing down.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill, double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0);
  void polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke, double width = 1.5);
  void polygon(const std::vector<std::pair<double, double>>& points, const std::string& fill);
  void text(double x, double y, const std::string& content, double size = 12.0,
            const std::string& anchor = "start");

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

/// Escapes &, <, >, " for XML text and attributes.
std::string xml_escape(const std::string& text);

/// Maps data coordinates onto a plot area with margins for axes.
struct PlotFrame {
  double width = 720, height = 440;
  double left = 70, right = 170, top = 30, bottom = 50;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

  double px(double x) const;
  double py(double y) const;
  /// Axes box, ticks and labels.
  void draw_axes(SvgDocument& svg, const std::string& x_label, const std::string& y_label) const;
};

/// Five round tick values covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi);

}  // namespace fmqa
