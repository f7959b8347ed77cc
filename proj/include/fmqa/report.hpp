#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "fmqa/optimizer.hpp"
#include "fmqa/record_io.hpp"

namespace fmqa {

/// Activation-count bucket colors, in bucket order {0, 1, 2-9, >=10}.
inline constexpr std::array<const char*, 4> kBucketColors = {"red", "green", "blue", "black"};
inline constexpr std::array<const char*, 4> kBucketNames = {"0", "1", "2-9", ">=10"};

/// Across-record mean bucket counts of one method, per evaluation.
struct CoverageSeries {
  std::string method;
  std::size_t total_bits = 0;
  int n_initial = 0;
  std::size_t records = 0;
  std::vector<std::size_t> evaluations;
  std::vector<std::array<double, 4>> mean_buckets;
};

/// Uses the evaluations present in every record's snapshots. Throws
/// std::invalid_argument when records disagree on method or bit count, or
/// when any record has no snapshots.
CoverageSeries coverage_series(const std::vector<RunRecord>& records);

void write_coverage_csv(std::ostream& out, const CoverageSeries& series);
/// Stacked-area plot of the buckets against evaluations.
std::string coverage_svg(const CoverageSeries& series);

/// Mean best-so-far curves, one per table, with the initial phase shaded up to
/// the first table's n_initial. Throws std::invalid_argument when tables differ
/// in length.
std::string trajectory_svg(const std::vector<TrajectoryTable>& tables, const std::string& title = "");

}  // namespace fmqa
