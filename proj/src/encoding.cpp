#include "fmqa/encoding.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fmqa {

DiscretizationGrid::DiscretizationGrid(std::vector<Bounds> bounds, int levels)
    : bounds_(std::move(bounds)), levels_(levels) {
  if (bounds_.empty()) throw std::invalid_argument("grid needs at least one variable");
  if (levels_ < 2) throw std::invalid_argument("grid needs M >= 2 levels per variable");
  for (std::size_t j = 0; j < bounds_.size(); ++j) {
    const auto& b = bounds_[j];
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
      throw std::invalid_argument("variable " + std::to_string(j) + ": bounds must satisfy min < max");
    }
  }
}

double DiscretizationGrid::value(std::size_t var, int level) const {
  const auto& b = bounds_.at(var);
  if (level < 0 || level >= levels_) throw std::out_of_range("grid level out of range");
  if (level == 0) return b.lower;
  if (level == levels_ - 1) return b.upper;
  return b.lower + (static_cast<double>(level) / (levels_ - 1)) * (b.upper - b.lower);
}

std::size_t DiscretizationGrid::cardinality() const {
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 1;
  for (std::size_t j = 0; j < num_vars(); ++j) {
    if (total > kMax / static_cast<std::size_t>(levels_)) return kMax;
    total *= static_cast<std::size_t>(levels_);
  }
  return total;
}

bool DiscretizationGrid::valid(const IndexVector& q) const {
  if (q.size() != num_vars()) return false;
  for (int m : q) {
    if (m < 0 || m >= levels_) return false;
  }
  return true;
}

OneHotVector OneHotVector::from_bits(std::span<const std::uint8_t> bits,
                                     const DiscretizationGrid& grid) {
  if (!validate_onehot(bits, grid)) throw std::invalid_argument("bit vector is not one-hot");
  IndexVector q(grid.num_vars());
  const int M = grid.levels();
  for (std::size_t j = 0; j < grid.num_vars(); ++j) {
    for (int m = 0; m < M; ++m) {
      if (bits[grid.bit_index(j, m)]) q[j] = m;
    }
  }
  return encode(q, grid);
}

OneHotVector encode(const IndexVector& q, const DiscretizationGrid& grid) {
  if (q.size() != grid.num_vars()) {
    throw std::out_of_range("index vector has " + std::to_string(q.size()) + " entries, grid has " +
                            std::to_string(grid.num_vars()) + " variables");
  }
  OneHotVector x;
  x.bits_.assign(grid.num_bits(), 0);
  x.active_.reserve(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (q[j] < 0 || q[j] >= grid.levels()) {
      throw std::out_of_range("index " + std::to_string(q[j]) + " of variable " + std::to_string(j) +
                              " outside [0, " + std::to_string(grid.levels()) + ")");
    }
    const auto i = grid.bit_index(j, q[j]);
    x.bits_[i] = 1;
    x.active_.push_back(i);
  }
  return x;
}

IndexVector indices_of(const OneHotVector& x, const DiscretizationGrid& grid) {
  if (x.size() != grid.num_bits()) throw std::invalid_argument("one-hot vector does not match grid");
  IndexVector q(grid.num_vars());
  const auto M = static_cast<std::size_t>(grid.levels());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = static_cast<int>(x.active()[j] - j * M);
  return q;
}

std::vector<double> decode_indices(const IndexVector& q, const DiscretizationGrid& grid) {
  if (!grid.valid(q)) throw std::out_of_range("index vector invalid for grid");
  std::vector<double> z(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) z[j] = grid.value(j, q[j]);
  return z;
}

std::vector<double> decode(const OneHotVector& x, const DiscretizationGrid& grid) {
  return decode_indices(indices_of(x, grid), grid);
}

std::vector<double> decode(std::span<const std::uint8_t> bits, const DiscretizationGrid& grid) {
  return decode(OneHotVector::from_bits(bits, grid), grid);
}

IndexVector repair_decode(std::span<const std::uint8_t> raw_bits, const DiscretizationGrid& grid,
                          Rng& rng) {
  if (raw_bits.size() != grid.num_bits()) throw std::invalid_argument("raw bit vector length mismatch");
  IndexVector q(grid.num_vars());
  const int M = grid.levels();
  for (std::size_t j = 0; j < grid.num_vars(); ++j) {
    int chosen = -1;
    for (int m = 0; m < M; ++m) {
      if (raw_bits[grid.bit_index(j, m)]) {
        chosen = m;
        break;
      }
    }
    if (chosen < 0) chosen = std::uniform_int_distribution<int>(0, M - 1)(rng);
    q[j] = chosen;
  }
  return q;
}

bool validate_onehot(std::span<const std::uint8_t> raw_bits, const DiscretizationGrid& grid) {
  if (raw_bits.size() != grid.num_bits()) {
    throw std::invalid_argument("bit vector has length " + std::to_string(raw_bits.size()) +
                                ", grid expects " + std::to_string(grid.num_bits()));
  }
  const int M = grid.levels();
  for (std::size_t j = 0; j < grid.num_vars(); ++j) {
    int sum = 0;
    for (int m = 0; m < M; ++m) sum += raw_bits[grid.bit_index(j, m)] ? 1 : 0;
    if (sum != 1) return false;
  }
  return true;
}

}  // namespace fmqa
