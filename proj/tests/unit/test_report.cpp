#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <sstream>

#include "fmqa/initdesign.hpp"
#include "fmqa/report.hpp"
#include "fmqa/svg.hpp"

using namespace fmqa;
namespace pt = boost::property_tree;

namespace {

// A record whose snapshots follow the given points, one per evaluation.
RunRecord record_of(const DiscretizationGrid& grid, const std::vector<IndexVector>& points, const std::string& method,
                    int n_initial) {
  RunRecord r;
  r.method = method;
  r.num_vars = grid.num_vars();
  r.levels = grid.levels();
  r.n_initial = n_initial;
  r.budget = static_cast<int>(points.size());
  std::vector<int> counts(grid.num_bits(), 0);
  for (std::size_t e = 0; e < points.size(); ++e) {
    for (std::size_t j = 0; j < grid.num_vars(); ++j) ++counts[grid.bit_index(j, points[e][j])];
    r.snapshots.push_back({e + 1, counts});
  }
  return r;
}

pt::ptree parse_svg(const std::string& text) {
  std::istringstream in(text);
  pt::ptree tree;
  pt::read_xml(in, tree);
  return tree;
}

std::vector<std::pair<double, double>> parse_points(const std::string& attr) {
  std::vector<std::pair<double, double>> out;
  std::istringstream in(attr);
  std::string pair;
  while (in >> pair) {
    const auto comma = pair.find(',');
    out.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
  }
  return out;
}

TrajectoryTable table(const std::string& method, std::vector<double> mean, int n_initial) {
  TrajectoryTable t;
  t.method = method;
  t.n_initial = n_initial;
  t.budget = static_cast<int>(mean.size());
  t.stddev.assign(mean.size(), 0.0);
  t.mean = std::move(mean);
  return t;
}

}  // namespace

TEST(Coverage, BucketsSumToTotalBits) {
  const DiscretizationGrid g(std::vector<Bounds>(5, {0, 1}), 8);
  std::vector<RunRecord> rs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    rs.push_back(record_of(g, uniform_design(g, {DesignMethod::Uniform, 30, seed}), "U", 8));
  }
  const auto s = coverage_series(rs);
  ASSERT_EQ(s.evaluations.size(), 30u);
  EXPECT_EQ(s.total_bits, 40u);
  for (const auto& b : s.mean_buckets) EXPECT_NEAR(b[0] + b[1] + b[2] + b[3], 40.0, 1e-12);
}

TEST(Coverage, LhsHasNoUncoveredBitsAtN0) {
  const DiscretizationGrid g(std::vector<Bounds>(6, {0, 1}), 8);
  for (auto method : {DesignMethod::LHS, DesignMethod::Sobol}) {
    const auto s = coverage_series({record_of(g, make_design(g, {method, 8, 3}), "x", 8)});
    EXPECT_EQ(s.mean_buckets.back()[0], 0.0);
    EXPECT_EQ(s.mean_buckets.back()[1], 48.0);
  }
}

TEST(Coverage, UniformUncoveredFractionMatchesFormula) {
  const DiscretizationGrid g(std::vector<Bounds>(8, {0, 1}), 32);
  std::vector<RunRecord> rs;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    rs.push_back(record_of(g, uniform_design(g, {DesignMethod::Uniform, 32, seed}), "U", 32));
  }
  const auto s = coverage_series(rs);
  const double fraction = s.mean_buckets.back()[0] / 256.0;
  const double p = std::pow(31.0 / 32.0, 32.0);
  // Per design, the uncovered count has variance below 256 p (1 - p); 300 designs.
  const double se = std::sqrt(p * (1 - p) / 256.0 / 300.0);
  EXPECT_NEAR(fraction, p, 4 * se);
  EXPECT_NEAR(fraction, 0.362, 0.01);
}

TEST(Coverage, CsvColumnsAndFraction) {
  const DiscretizationGrid g(std::vector<Bounds>(2, {0, 1}), 4);
  const auto s = coverage_series({record_of(g, {{0, 0}, {1, 1}}, "m", 1)});
  std::ostringstream out;
  write_coverage_csv(out, s);
  EXPECT_EQ(out.str(),
            "# method=m records=1 total_bits=8 n_initial=1\n"
            "evaluation,bucket_0,bucket_1,bucket_2_9,bucket_10_plus,fraction_never_active\n"
            "1,6,2,0,0,0.75\n"
            "2,4,4,0,0,0.5\n");
}

TEST(Coverage, RejectsRecordsWithoutSnapshots) {
  RunRecord r;
  r.method = "m";
  r.num_vars = 2;
  r.levels = 4;
  EXPECT_THROW(coverage_series({r}), std::invalid_argument);
  EXPECT_THROW(coverage_series({}), std::invalid_argument);
  const DiscretizationGrid g(std::vector<Bounds>(2, {0, 1}), 4);
  EXPECT_THROW(coverage_series({record_of(g, {{0, 0}}, "a", 1), record_of(g, {{0, 0}}, "b", 1)}),
               std::invalid_argument);
}

TEST(Coverage, SvgIsWellFormedWithBucketColors) {
  const DiscretizationGrid g(std::vector<Bounds>(3, {0, 1}), 4);
  const auto svg = coverage_svg(coverage_series({record_of(g, uniform_design(g, {DesignMethod::Uniform, 20, 1}), "A&B", 4)}));
  const auto tree = parse_svg(svg);
  std::vector<std::string> fills;
  for (const auto& [name, node] : tree.get_child("svg")) {
    if (name == "polygon") fills.push_back(node.get<std::string>("<xmlattr>.fill"));
  }
  EXPECT_EQ(fills, (std::vector<std::string>{"red", "green", "blue", "black"}));
}

TEST(Trajectory, RejectsMismatchedLengths) {
  EXPECT_THROW(trajectory_svg({table("a", {1, 2, 3}, 1), table("b", {1, 2}, 1)}), std::invalid_argument);
  EXPECT_THROW(trajectory_svg({}), std::invalid_argument);
}

TEST(Trajectory, FlatCurveIsHorizontalAndShadingEndsAtN0) {
  const auto svg = trajectory_svg({table("flat", std::vector<double>(20, 3.0), 8), table("down", {
      5, 5, 4, 4, 4, 4, 4, 4, 3, 3, 3, 3, 2, 2, 2, 2, 2, 1, 1, 1}, 8)}, "t <1>");
  const auto tree = parse_svg(svg);
  std::vector<std::vector<std::pair<double, double>>> lines;
  const pt::ptree* shade = nullptr;
  for (const auto& [name, node] : tree.get_child("svg")) {
    if (name == "polyline") lines.push_back(parse_points(node.get<std::string>("<xmlattr>.points")));
    if (name == "rect" && node.get<std::string>("<xmlattr>.fill") == "gray") shade = &node;
  }
  ASSERT_EQ(lines.size(), 2u);
  ASSERT_EQ(lines[0].size(), 20u);
  for (const auto& [x, y] : lines[0]) EXPECT_DOUBLE_EQ(y, lines[0][0].second);
  ASSERT_NE(shade, nullptr);
  const double x0 = shade->get<double>("<xmlattr>.x");
  const double w = shade->get<double>("<xmlattr>.width");
  // Polyline points are at evaluations 1..20; the shading spans evaluations 1..N0.
  EXPECT_NEAR(x0, lines[0][0].first, 1e-3);
  EXPECT_NEAR(x0 + w, lines[0][7].first, 1e-3);
}
