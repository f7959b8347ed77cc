#include "fmqa/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "fmqa/initdesign.hpp"
#include "fmqa/svg.hpp"

namespace fmqa {

CoverageSeries coverage_series(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("coverage_series: no records");
  CoverageSeries s;
  s.method = records.front().method;
  s.total_bits = records.front().num_vars * static_cast<std::size_t>(records.front().levels);
  s.n_initial = records.front().n_initial;
  s.records = records.size();

  std::map<std::size_t, std::pair<std::size_t, std::array<double, 4>>> acc;
  for (const auto& r : records) {
    if (r.method != s.method) throw std::invalid_argument("coverage_series: mixed methods");
    if (r.num_vars * static_cast<std::size_t>(r.levels) != s.total_bits) {
      throw std::invalid_argument("coverage_series: records differ in bit count");
    }
    if (r.snapshots.empty()) throw std::invalid_argument("coverage_series: record has no activation snapshots");
    for (const auto& snap : r.snapshots) {
      if (snap.counts.size() != s.total_bits) throw std::invalid_argument("coverage_series: snapshot size mismatch");
      const auto b = bucket_counts(snap.counts);
      auto& [n, sum] = acc[snap.evaluations];
      ++n;
      for (std::size_t k = 0; k < 4; ++k) sum[k] += static_cast<double>(b[k]);
    }
  }
  for (const auto& [evals, entry] : acc) {
    const auto& [n, sum] = entry;
    if (n != records.size()) continue;
    std::array<double, 4> mean{};
    for (std::size_t k = 0; k < 4; ++k) mean[k] = sum[k] / static_cast<double>(n);
    s.evaluations.push_back(evals);
    s.mean_buckets.push_back(mean);
  }
  return s;
}

void write_coverage_csv(std::ostream& out, const CoverageSeries& s) {
  out << "# method=" << s.method << " records=" << s.records << " total_bits=" << s.total_bits
      << " n_initial=" << s.n_initial << "\n";
  out << "evaluation,bucket_0,bucket_1,bucket_2_9,bucket_10_plus,fraction_never_active\n";
  for (std::size_t i = 0; i < s.evaluations.size(); ++i) {
    const auto& b = s.mean_buckets[i];
    out << s.evaluations[i];
    for (double v : b) out << ',' << format_real(v);
    out << ',' << format_real(b[0] / static_cast<double>(s.total_bits)) << '\n';
  }
}

std::string coverage_svg(const CoverageSeries& s) {
  PlotFrame frame;
  frame.x_min = s.evaluations.empty() ? 0.0 : static_cast<double>(s.evaluations.front());
  frame.x_max = s.evaluations.empty() ? 1.0 : static_cast<double>(s.evaluations.back());
  frame.y_max = static_cast<double>(s.total_bits);
  SvgDocument svg(frame.width, frame.height);
  svg.text(frame.width / 2, 18, "Bit activation counts: " + s.method, 14, "middle");

  // Bottom-up cumulative bands: bucket 0 at the bottom.
  std::vector<double> lower(s.evaluations.size(), 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<std::pair<double, double>> poly;
    std::vector<double> upper(lower);
    for (std::size_t i = 0; i < s.evaluations.size(); ++i) upper[i] += s.mean_buckets[i][k];
    for (std::size_t i = 0; i < s.evaluations.size(); ++i) {
      poly.emplace_back(frame.px(static_cast<double>(s.evaluations[i])), frame.py(upper[i]));
    }
    for (std::size_t i = s.evaluations.size(); i-- > 0;) {
      poly.emplace_back(frame.px(static_cast<double>(s.evaluations[i])), frame.py(lower[i]));
    }
    if (s.evaluations.size() >= 2) svg.polygon(poly, kBucketColors[k]);
    lower = std::move(upper);
  }
  frame.draw_axes(svg, "Number of function evaluations", "Number of bits");
  const double lx = frame.width - frame.right + 15;
  for (std::size_t k = 0; k < 4; ++k) {
    const double ly = frame.top + 10 + 22.0 * static_cast<double>(k);
    svg.rect(lx, ly, 14, 14, kBucketColors[k]);
    svg.text(lx + 20, ly + 12, std::string("count ") + kBucketNames[k], 12);
  }
  return svg.str();
}

std::string trajectory_svg(const std::vector<TrajectoryTable>& tables, const std::string& title) {
  if (tables.empty()) throw std::invalid_argument("trajectory_svg: no trajectories");
  const std::size_t length = tables.front().mean.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& t : tables) {
    if (t.mean.size() != length) {
      throw std::invalid_argument("trajectory lengths differ: " + tables.front().method + " has " +
                                  std::to_string(length) + ", " + t.method + " has " + std::to_string(t.mean.size()));
    }
    for (double v : t.mean) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (length == 0 || !std::isfinite(lo)) throw std::invalid_argument("trajectory_svg: no finite values");
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);

  PlotFrame frame;
  frame.x_min = 1;
  frame.x_max = std::max<double>(2, static_cast<double>(length));
  frame.y_min = lo - pad;
  frame.y_max = hi + pad;
  SvgDocument svg(frame.width, frame.height);
  if (!title.empty()) svg.text(frame.width / 2, 18, title, 14, "middle");

  const double n0 = std::clamp<double>(tables.front().n_initial, frame.x_min, frame.x_max);
  svg.rect(frame.px(frame.x_min), frame.py(frame.y_max), frame.px(n0) - frame.px(frame.x_min),
           frame.py(frame.y_min) - frame.py(frame.y_max), "gray", 0.3);

  static constexpr std::array<const char*, 8> palette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                         "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  for (std::size_t m = 0; m < tables.size(); ++m) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t e = 0; e < length; ++e) {
      if (std::isfinite(tables[m].mean[e])) pts.emplace_back(frame.px(static_cast<double>(e + 1)), frame.py(tables[m].mean[e]));
    }
    const char* color = palette[m % palette.size()];
    svg.polyline(pts, color);
    const double ly = frame.top + 10 + 22.0 * static_cast<double>(m);
    const double lx = frame.width - frame.right + 15;
    svg.line(lx, ly + 7, lx + 20, ly + 7, color, 2.5);
    svg.text(lx + 26, ly + 11, tables[m].method, 12);
  }
  frame.draw_axes(svg, "Number of function evaluations", "Best value found");
  return svg.str();
}

}  // namespace fmqa
