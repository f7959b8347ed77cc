#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fmqa/annealer.hpp"
#include "fmqa/blackbox.hpp"
#include "fmqa/encoding.hpp"
#include "fmqa/errors.hpp"
#include "fmqa/initdesign.hpp"
#include "fmqa/surrogate.hpp"

namespace fmqa {

/// Annealer settings used by the loop unless overridden. The loop anneals
/// penalized surrogates whose scale follows the objective, so the beta range
/// is derived from Q.
inline AnnealConfig loop_anneal_defaults() {
  AnnealConfig a;
  a.auto_beta_range = true;
  return a;
}

struct LoopConfig {
  /// Total evaluations, initial design included.
  int budget = 200;
  DesignSpec design;
  TrainConfig train;
  AnnealConfig anneal = loop_anneal_defaults();
  int rank = 5;
  std::uint64_t seed = 0;
  /// Called with each iteration's freshly trained model (checkpoint inspection).
  std::function<void(std::size_t iteration, const FmParams& params)> on_model;

  void validate() const;
};

/// Cumulative activation counts after `evaluations` black-box calls.
struct ActivationSnapshot {
  std::size_t evaluations = 0;
  std::vector<int> counts;
};

struct PhaseTiming {
  double design_ms = 0.0;
  double train_ms = 0.0;
  double sample_ms = 0.0;
  double evaluate_ms = 0.0;
};

struct RunRecord {
  std::string problem;
  std::string method;
  Direction direction = Direction::Minimize;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t num_vars = 0;
  int levels = 0;
  int budget = 0;
  int n_initial = 0;

  /// Natural-direction values per evaluation and their running best.
  std::vector<double> raw_values;
  std::vector<double> best_trajectory;
  std::vector<IndexVector> evaluated;
  Dataset final_dataset;
  std::vector<ActivationSnapshot> snapshots;

  /// Per loop iteration (empty for random search).
  std::vector<double> lambda_pen;
  std::vector<std::uint8_t> sampler_feasible;
  std::vector<int> dedupe_steps;
  std::size_t failures = 0;
  std::vector<std::string> warnings;
  PhaseTiming timing;
};

/// Indices already sent to the black box.
using EvaluatedSet = std::set<IndexVector>;

/// Returns `candidate` if unevaluated; otherwise random-walks it (each index
/// moves by an independent draw from {-1, 0, +1}, clipped) until it leaves
/// `evaluated`. Throws ExhaustionError if every grid point is in `evaluated`.
/// `steps`, when given, receives the number of perturbation rounds.
IndexVector dedupe_perturb(const IndexVector& candidate, const EvaluatedSet& evaluated,
                           const DiscretizationGrid& grid, Rng& rng, int* steps = nullptr);

/// Activation snapshots are kept after every evaluation up to this many bits,
/// every fifth evaluation above it.
inline constexpr std::size_t kDenseSnapshotBits = 2048;

/// The FMQA loop: initial design, then retrain / QUBO / anneal / repair / dedupe /
/// evaluate until the budget is spent.
RunRecord run(const BlackBoxProblem& problem, const DiscretizationGrid& grid, const LoopConfig& config,
              const std::string& method_label = "FMQA");

/// Uniform iid grid points, evaluated through the same ledger machinery.
/// `n_initial` only labels the initial phase for summaries.
RunRecord random_search(const BlackBoxProblem& problem, const DiscretizationGrid& grid, int budget,
                        std::uint64_t seed, int n_initial = 0, const std::string& method_label = "Random");

/// Parameters the loop would train at a given iteration; for checkpoint checks.
FmParams train_for_iteration(const Dataset& data, const LoopConfig& config, const DiscretizationGrid& grid,
                             std::size_t iteration);

struct Summary {
  std::string method;
  std::size_t trials = 0;
  int budget = 0;
  int n_initial = 0;
  Direction direction = Direction::Minimize;
  std::vector<double> mean;
  std::vector<double> stddev;
  double initial_mean = 0.0;
  double initial_std = 0.0;
  double final_mean = 0.0;
  double final_std = 0.0;
  double gain = 0.0;
};

/// Per-evaluation mean and sample standard deviation (0 for one record) of the
/// best-so-far trajectories; initial best is the best over the first n_initial
/// evaluations. Throws std::invalid_argument on empty input or mismatched budgets.
Summary aggregate(const std::vector<RunRecord>& records);

}  // namespace fmqa
