#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fmqa/encoding.hpp"
#include "fmqa/errors.hpp"
#include "fmqa/qubo.hpp"

namespace fmqa {

struct AnnealConfig {
  int num_sweeps = 2000;
  int num_restarts = 64;
  /// Inverse temperatures of the geometric schedule. beta_final may be +inf
  /// (and beta_initial == beta_final) for a pure-descent run.
  double beta_initial = 0.01;
  double beta_final = 10.0;
  /// Derive the beta range from Q instead: the hot end accepts the largest
  /// possible flip delta with probability 1/2, the cold end accepts the
  /// smallest nonzero coefficient scale with probability 1/100.
  bool auto_beta_range = false;
  /// Soft wall-clock deadline checked between sweeps.
  std::optional<int> time_budget_ms;
  std::uint64_t seed = 0;
  /// Worker threads across restarts; results do not depend on it.
  int num_threads = 1;

  void validate() const;
};

struct SampleResult {
  BitVector best_bits;
  double best_energy = 0.0;
  /// Chains that ran to completion. 0 with `budget_exhausted` means the
  /// deadline hit before any sweep finished and best_bits is a random start.
  int restarts_run = 0;
  bool feasible = true;
  bool budget_exhausted = false;
};

/// Single-flip Metropolis annealing with restarts. Deterministic given config.seed
/// when no time budget is set.
SampleResult sample(const QuboMatrix& Q, const AnnealConfig& config);
/// As above; `feasible` reports one-hot validity of best_bits on `grid`.
SampleResult sample(const QuboMatrix& Q, const AnnealConfig& config, const DiscretizationGrid& grid);

/// Exhaustive minimum for N <= 24; ties go to the smallest integer reading of
/// the bit string with x_0 as the most significant bit.
SampleResult brute_force_min(const QuboMatrix& Q);

inline constexpr std::size_t kBruteForceMaxBits = 24;

/// energy(x with bit i flipped) - energy(x), in O(N).
double incremental_delta(const QuboMatrix& Q, std::span<const std::uint8_t> x, std::size_t i);

struct BetaRange {
  double initial = 0.0;
  double final = 0.0;
};

/// The beta range sample() will use for Q under `config`.
BetaRange effective_beta_range(const QuboMatrix& Q, const AnnealConfig& config);

namespace detail {

struct ChainOutcome {
  BitVector best_bits;
  double best_energy = 0.0;
  bool completed = false;
  /// Best energy after each completed sweep (only filled when requested).
  std::vector<double> best_per_sweep;
  /// Energy deltas of every accepted flip (only filled when requested).
  std::vector<double> accepted_deltas;
  BitVector final_bits;
};

/// Metropolis test u < exp(-x) for x >= 0, usually without calling exp.
bool metropolis_accept(double x, double u);

/// One annealing chain; exposed for property tests.
ChainOutcome run_chain(const QuboMatrix& Q, const AnnealConfig& config, std::size_t chain,
                       bool record_trace = false);

}  // namespace detail

}  // namespace fmqa
