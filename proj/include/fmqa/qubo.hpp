#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fmqa/encoding.hpp"
#include "fmqa/surrogate.hpp"

namespace fmqa {

/// Dense upper-triangular QUBO: E(x) = sum_{i<=j} Q_ij x_i x_j.
///
/// `offset` carries constants dropped from the optimized form (FM bias,
/// penalty constants); energy() never includes it.
class QuboMatrix {
 public:
  QuboMatrix() = default;
  explicit QuboMatrix(std::size_t n) : n_(n), entries_(n * n, 0.0) {}

  std::size_t size() const { return n_; }

  /// Coefficient of x_i x_j; symmetric in (i, j).
  double at(std::size_t i, std::size_t j) const {
    return i <= j ? entries_[i * n_ + j] : entries_[j * n_ + i];
  }
  /// Adds to the canonical upper-triangular slot of (i, j).
  void add(std::size_t i, std::size_t j, double value);
  void set(std::size_t i, std::size_t j, double value);

  double offset() const { return offset_; }
  void set_offset(double offset) { offset_ = offset; }

  bool all_finite() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
  double offset_ = 0.0;
};

/// Q_ii = w_i, Q_ij = <v_i, v_j> for i < j, offset = bias.
QuboMatrix from_fm(const FmParams& p);

double energy(const QuboMatrix& Q, std::span<const std::uint8_t> x);

/// 8 * max(1, floor(max_abs + 0.5)).
double compute_lambda_pen(double history_max_abs);

/// Adds lambda * sum_j (sum_m x_jm - 1)^2 in QUBO form; the constant n_x * lambda goes to offset.
QuboMatrix augment_penalty(const QuboMatrix& Q, const DiscretizationGrid& grid, double lambda_pen);

/// Sparse coordinate text: "# offset <v>", "# n <N>" header, then "i j value" per nonzero.
void write_coordinate(std::ostream& out, const QuboMatrix& Q);

/// Parses the coordinate format. Lines starting with '#' are comments except the
/// recognized "# n" / "# offset" headers. Without "# n", the dimension is the
/// largest index plus one. Throws std::runtime_error naming the line on failure.
QuboMatrix read_coordinate(std::istream& in, int index_base = 0);

}  // namespace fmqa
