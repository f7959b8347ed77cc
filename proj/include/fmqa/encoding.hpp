#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fmqa/random.hpp"

namespace fmqa {

using BitVector = std::vector<std::uint8_t>;
/// One discrete level per design variable, each in [0, M).
using IndexVector = std::vector<int>;

struct Bounds {
  double lower = 0.0;
  double upper = 1.0;
};

/// Per-variable uniform M-level grids over a continuous box.
///
/// Bits are laid out in contiguous blocks: bit (j, m) lives at j * M + m.
class DiscretizationGrid {
 public:
  DiscretizationGrid(std::vector<Bounds> bounds, int levels);

  std::size_t num_vars() const { return bounds_.size(); }
  int levels() const { return levels_; }
  std::size_t num_bits() const { return bounds_.size() * static_cast<std::size_t>(levels_); }
  const std::vector<Bounds>& bounds() const { return bounds_; }

  std::size_t bit_index(std::size_t var, int level) const {
    return var * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(level);
  }

  /// Grid value of `level` for variable `var`; endpoints are exact.
  double value(std::size_t var, int level) const;

  /// M^n_x, saturated at SIZE_MAX.
  std::size_t cardinality() const;

  bool valid(const IndexVector& q) const;

 private:
  std::vector<Bounds> bounds_;
  int levels_;
};

/// A bit vector with exactly one active bit per block.
class OneHotVector {
 public:
  OneHotVector() = default;

  /// Throws std::invalid_argument unless `bits` is one-hot for `grid`.
  static OneHotVector from_bits(std::span<const std::uint8_t> bits, const DiscretizationGrid& grid);

  const BitVector& bits() const { return bits_; }
  /// Active bit positions, one per block in block order.
  const std::vector<std::size_t>& active() const { return active_; }
  std::size_t size() const { return bits_.size(); }

  friend bool operator==(const OneHotVector& a, const OneHotVector& b) { return a.bits_ == b.bits_; }
  friend auto operator<=>(const OneHotVector& a, const OneHotVector& b) { return a.bits_ <=> b.bits_; }

 private:
  friend OneHotVector encode(const IndexVector& q, const DiscretizationGrid& grid);
  BitVector bits_;
  std::vector<std::size_t> active_;
};

/// Throws std::out_of_range for a wrong length or an index outside [0, M).
OneHotVector encode(const IndexVector& q, const DiscretizationGrid& grid);

/// Active level per block of a valid one-hot vector.
IndexVector indices_of(const OneHotVector& x, const DiscretizationGrid& grid);

std::vector<double> decode(const OneHotVector& x, const DiscretizationGrid& grid);
/// Raw-bit variant; throws std::invalid_argument unless `bits` is one-hot.
std::vector<double> decode(std::span<const std::uint8_t> bits, const DiscretizationGrid& grid);
std::vector<double> decode_indices(const IndexVector& q, const DiscretizationGrid& grid);

/// Maps arbitrary sampler output to levels. Per block: the single active bit,
/// else the lowest active bit, else a level drawn uniformly from `rng`.
IndexVector repair_decode(std::span<const std::uint8_t> raw_bits, const DiscretizationGrid& grid,
                          Rng& rng);

/// True iff every block sums to exactly one. Throws std::invalid_argument on a length mismatch.
bool validate_onehot(std::span<const std::uint8_t> raw_bits, const DiscretizationGrid& grid);

}  // namespace fmqa
