#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fmqa/encoding.hpp"
#include "fmqa/errors.hpp"

namespace fmqa {

enum class Direction { Minimize, Maximize };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

/// Maps a continuous design point to its natural-direction objective value.
/// Implementations signal failure by throwing (EvaluationError preferred).
using Evaluator = std::function<double(std::span<const double>)>;

struct BlackBoxProblem {
  std::string name;
  std::vector<Bounds> bounds;
  Direction direction = Direction::Minimize;
  Evaluator evaluator;
  std::string description;
  /// Natural-direction optimum over the continuous box, when known.
  std::optional<double> known_optimum;
  /// For separable problems: value = sum_j term(j, z_j). Lets the grid optimum
  /// be computed per coordinate.
  std::function<double(std::size_t, double)> separable_term;

  std::size_t num_vars() const { return bounds.size(); }
  /// Internal minimization value f_BB for a natural value.
  double to_internal(double natural) const { return direction == Direction::Maximize ? -natural : natural; }
  double to_natural(double internal) const { return direction == Direction::Maximize ? -internal : internal; }
  /// True when `a` is strictly better than `b` in the natural direction.
  bool better(double a, double b) const { return direction == Direction::Maximize ? a > b : a < b; }
};

struct LedgerEntry {
  std::vector<double> point;
  double raw = 0.0;       // natural direction
  double internal = 0.0;  // minimization sign
  bool failed = false;
  bool clipped = false;
  std::string message;
};

/// Append-only record of every black-box call.
class EvalLedger {
 public:
  void append(LedgerEntry entry) { entries_.push_back(std::move(entry)); }
  std::size_t count() const { return entries_.size(); }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::size_t failures() const;

 private:
  std::vector<LedgerEntry> entries_;
};

/// Clips z to the box, evaluates, appends to the ledger and returns the internal
/// (minimization) value. Evaluator failures are recorded with a penalized value:
/// worst internal value so far plus the ledger's max-min spread (1.0 with fewer
/// than two entries).
double evaluate(const BlackBoxProblem& problem, std::span<const double> z, EvalLedger& ledger);

/// Sphere, rotated ellipsoid, Rastrigin and a deceptive trap (maximized), each at
/// n_x in {5, 17, 32}. Names look like "rastrigin-5".
std::vector<BlackBoxProblem> synthetic_suite();

/// Builds one synthetic problem by family name ("sphere", "ellipsoid",
/// "rastrigin", "trap") at any dimension. Throws std::invalid_argument.
BlackBoxProblem make_synthetic(std::string_view family, std::size_t num_vars);

/// Looks up "family-n" names, e.g. "trap-5". Any positive n is accepted.
BlackBoxProblem find_synthetic(std::string_view name);

/// Best natural value over all grid points: per-coordinate for separable
/// problems, exhaustive when the grid has at most `exhaustive_cap` points.
std::optional<double> grid_optimum(const BlackBoxProblem& problem, const DiscretizationGrid& grid,
                                   std::size_t exhaustive_cap = std::size_t{1} << 20);

/// Exhaustive search over the grid. Throws CapacityError above `cap` points.
/// Returns (best natural value, its index vector).
std::pair<double, IndexVector> exhaustive_grid_search(const BlackBoxProblem& problem,
                                                      const DiscretizationGrid& grid,
                                                      std::size_t cap = std::size_t{1} << 20);

struct ExternalOptions {
  std::string name = "external";
  std::vector<Bounds> bounds;
  Direction direction = Direction::Minimize;
};

/// Wraps a subprocess as an evaluator. The design point goes to a temp file,
/// one value per line; "{input}" in `command` is replaced by its path (or the
/// path is appended). The first stdout line must parse as one real. A nonzero
/// exit, a timeout or malformed output raise EvaluationError with stderr attached.
BlackBoxProblem external_adapter(std::string command, int timeout_ms, ExternalOptions options = {});

}  // namespace fmqa
