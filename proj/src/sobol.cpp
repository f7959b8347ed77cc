#include "fmqa/sobol.hpp"

#include <bit>
#include <string>

#include "fmqa/errors.hpp"
#include "fmqa/random.hpp"

namespace fmqa {

namespace {

struct DirectionRow {
  std::uint32_t polynomial;
  std::vector<std::uint32_t> initial;
};

const std::vector<DirectionRow>& direction_table() {
  static const std::vector<DirectionRow> table = {
#include "sobol_direction_numbers.inc"
  };
  return table;
}

constexpr int kBits = 32;

}  // namespace

std::size_t SobolSequence::max_dimensions() { return direction_table().size(); }

SobolSequence::SobolSequence(std::size_t dims) : dims_(dims), directions_(dims * kBits, 0) {
  const auto& table = direction_table();
  if (dims == 0) throw std::invalid_argument("Sobol' sequence needs at least one dimension");
  if (dims > table.size()) {
    throw CapacityError("Sobol' direction table holds " + std::to_string(table.size()) +
                        " dimensions, " + std::to_string(dims) + " requested");
  }
  for (std::size_t d = 0; d < dims; ++d) {
    std::uint32_t* v = &directions_[d * kBits];
    const auto& row = table[d];
    if (d == 0) {
      for (int b = 0; b < kBits; ++b) v[b] = std::uint32_t{1} << (kBits - 1 - b);
      continue;
    }
    // Bratley-Fox recurrence on the odd integers m_k, then shift into place.
    const int degree = std::bit_width(row.polynomial) - 1;
    std::vector<std::uint32_t> m(kBits);
    for (int k = 0; k < degree && k < kBits; ++k) m[k] = row.initial[k];
    for (int k = degree; k < kBits; ++k) {
      std::uint32_t next = m[k - degree] ^ (m[k - degree] << degree);
      for (int i = 1; i < degree; ++i) {
        if ((row.polynomial >> (degree - i)) & 1u) next ^= m[k - i] << i;
      }
      m[k] = next;
    }
    for (int b = 0; b < kBits; ++b) v[b] = m[b] << (kBits - 1 - b);
  }
}

std::vector<std::uint32_t> SobolSequence::points(std::size_t count) const {
  std::vector<std::uint32_t> out(count * dims_, 0);
  std::vector<std::uint32_t> state(dims_, 0);
  for (std::size_t t = 1; t < count; ++t) {
    const int c = std::countr_zero(static_cast<std::uint64_t>(t));
    for (std::size_t d = 0; d < dims_; ++d) {
      state[d] ^= directions_[d * kBits + static_cast<std::size_t>(c)];
      out[t * dims_ + d] = state[d];
    }
  }
  return out;
}

std::uint32_t owen_scramble(std::uint32_t value, std::uint64_t key) {
  std::uint32_t out = value;
  for (int depth = 0; depth < kBits; ++depth) {
    const int bit = kBits - 1 - depth;
    // Node identity: depth plus the original digits above `bit`.
    const std::uint64_t prefix = depth == 0 ? 0 : static_cast<std::uint64_t>(value >> (bit + 1));
    const std::uint64_t node = (static_cast<std::uint64_t>(depth) << 32) | prefix;
    if (mix64(key ^ mix64(node)) & 1u) out ^= std::uint32_t{1} << bit;
  }
  return out;
}

}  // namespace fmqa
