#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fmqa {

/// Gray-code Sobol' generator over the embedded Joe-Kuo direction numbers,
/// with 32-bit output digits.
class SobolSequence {
 public:
  /// Throws CapacityError when `dims` exceeds max_dimensions().
  explicit SobolSequence(std::size_t dims);

  static std::size_t max_dimensions();

  std::size_t dimensions() const { return dims_; }

  /// First `count` points as 32-bit integers; point t, coordinate j at [t * dims + j].
  /// The value in [0, 1) is the integer times 2^-32.
  std::vector<std::uint32_t> points(std::size_t count) const;

 private:
  std::size_t dims_;
  std::vector<std::uint32_t> directions_;  // dims x 32
};

/// Nested uniform (Owen) scrambling of one 32-bit coordinate: digit b is
/// flipped by a random bit keyed on `key` and all more significant input digits.
std::uint32_t owen_scramble(std::uint32_t value, std::uint64_t key);

inline double to_unit(std::uint32_t value) { return static_cast<double>(value) * 0x1p-32; }

}  // namespace fmqa
