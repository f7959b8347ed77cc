#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fmqa/encoding.hpp"
#include "fmqa/errors.hpp"

namespace fmqa {

enum class DesignMethod { Uniform, LHS, Sobol };

std::string_view to_string(DesignMethod method);
/// Accepts "uniform", "lhs", "sobol" (case-insensitive). Throws std::invalid_argument.
DesignMethod parse_design_method(std::string_view text);

struct DesignSpec {
  DesignMethod method = DesignMethod::Uniform;
  int n_samples = 32;
  std::uint64_t seed = 0;
};

/// Activation statistics c_{j,m} of a set of one-hot points.
struct CoverageReport {
  std::size_t num_vars = 0;
  int levels = 0;
  std::size_t num_points = 0;
  /// Row-major n_x x M.
  std::vector<int> counts;
  std::size_t never_active = 0;
  double fraction_never_active = 0.0;
  std::uint64_t pair_capacity = 0;
  std::uint64_t pairs_covered = 0;

  int count(std::size_t var, int level) const {
    return counts[var * static_cast<std::size_t>(levels) + static_cast<std::size_t>(level)];
  }
};

/// Bits bucketed by activation count: 0, 1, 2-9, >= 10.
using ActivationBuckets = std::array<std::size_t, 4>;
ActivationBuckets bucket_counts(const std::vector<int>& counts);

std::vector<IndexVector> uniform_design(const DiscretizationGrid& grid, const DesignSpec& spec);
std::vector<IndexVector> lhs_design(const DiscretizationGrid& grid, const DesignSpec& spec);
/// Throws CapacityError when n_x exceeds the direction table.
std::vector<IndexVector> sobol_design(const DiscretizationGrid& grid, const DesignSpec& spec);
/// Dispatches on spec.method.
std::vector<IndexVector> make_design(const DiscretizationGrid& grid, const DesignSpec& spec);

/// Conditions under which the design cannot guarantee complete marginal coverage.
std::vector<std::string> design_warnings(const DiscretizationGrid& grid, const DesignSpec& spec);

/// Maps a unit coordinate to a level: min(floor(M s), M - 1).
int unit_to_level(double s, int levels);

/// C(n_x, 2) * M^2.
std::uint64_t pair_capacity(std::size_t num_vars, int levels);

/// Throws std::invalid_argument when a point does not match the grid.
CoverageReport coverage_counts(const std::vector<OneHotVector>& points, const DiscretizationGrid& grid);

struct UncoveredEstimate {
  double probability = 1.0;
  double expected_count = 0.0;
};

/// Chance that a given bit is never active after `n_samples` uniform draws, and
/// the expected number of such bits.
UncoveredEstimate expected_uncovered(int levels, int n_samples, std::size_t num_vars);

}  // namespace fmqa
