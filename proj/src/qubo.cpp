#include "fmqa/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fmqa {

void QuboMatrix::add(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) throw std::out_of_range("QUBO index out of range");
  if (i > j) std::swap(i, j);
  entries_[i * n_ + j] += value;
}

void QuboMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) throw std::out_of_range("QUBO index out of range");
  if (i > j) std::swap(i, j);
  entries_[i * n_ + j] = value;
}

bool QuboMatrix::all_finite() const {
  return std::isfinite(offset_) &&
         std::all_of(entries_.begin(), entries_.end(), [](double x) { return std::isfinite(x); });
}

QuboMatrix from_fm(const FmParams& p) {
  const std::size_t N = p.num_bits;
  QuboMatrix Q(N);
  for (std::size_t i = 0; i < N; ++i) {
    Q.set(i, i, p.linear[i]);
    const auto vi = p.row(i);
    for (std::size_t j = i + 1; j < N; ++j) {
      const auto vj = p.row(j);
      double dot = 0.0;
      for (int k = 0; k < p.rank; ++k) dot += vi[k] * vj[k];
      Q.set(i, j, dot);
    }
  }
  Q.set_offset(p.bias);
  return Q;
}

double energy(const QuboMatrix& Q, std::span<const std::uint8_t> x) {
  if (x.size() != Q.size()) {
    throw std::invalid_argument("energy: vector has " + std::to_string(x.size()) + " bits, Q is " +
                                std::to_string(Q.size()));
  }
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    for (std::size_t j = i; j < x.size(); ++j) {
      if (x[j]) e += Q.at(i, j);
    }
  }
  return e;
}

double compute_lambda_pen(double history_max_abs) {
  if (!std::isfinite(history_max_abs)) throw std::invalid_argument("lambda_pen: non-finite input");
  if (history_max_abs < 0.0) throw std::invalid_argument("lambda_pen: negative max-abs");
  return 8.0 * std::max(1.0, std::floor(history_max_abs + 0.5));
}

QuboMatrix augment_penalty(const QuboMatrix& Q, const DiscretizationGrid& grid, double lambda_pen) {
  if (Q.size() != grid.num_bits()) throw std::invalid_argument("augment_penalty: Q does not match grid");
  QuboMatrix out = Q;
  const int M = grid.levels();
  for (std::size_t j = 0; j < grid.num_vars(); ++j) {
    for (int a = 0; a < M; ++a) {
      const auto ia = grid.bit_index(j, a);
      out.add(ia, ia, -lambda_pen);
      for (int b = a + 1; b < M; ++b) out.add(ia, grid.bit_index(j, b), 2.0 * lambda_pen);
    }
  }
  out.set_offset(Q.offset() + static_cast<double>(grid.num_vars()) * lambda_pen);
  return out;
}

void write_coordinate(std::ostream& out, const QuboMatrix& Q) {
  const auto old_precision = out.precision(17);
  out << "# offset " << Q.offset() << "\n# n " << Q.size() << "\n";
  for (std::size_t i = 0; i < Q.size(); ++i) {
    for (std::size_t j = i; j < Q.size(); ++j) {
      const double v = Q.at(i, j);
      if (v != 0.0) out << i << ' ' << j << ' ' << v << '\n';
    }
  }
  out.precision(old_precision);
}

namespace {

struct Entry {
  long long i;
  long long j;
  double value;
  std::size_t line;
};

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line) + ": " + what);
}

}  // namespace

QuboMatrix read_coordinate(std::istream& in, int index_base) {
  std::vector<Entry> entries;
  long long declared_n = -1;
  double offset = 0.0;
  long long max_index = -1;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (text[first] == '#') {
      std::istringstream header(text.substr(first + 1));
      std::string key;
      header >> key;
      if (key == "n") {
        if (!(header >> declared_n) || declared_n < 1) parse_error(line, "bad '# n' header");
      } else if (key == "offset") {
        if (!(header >> offset)) parse_error(line, "bad '# offset' header");
      }
      continue;
    }
    std::istringstream fields(text);
    Entry e{};
    e.line = line;
    if (!(fields >> e.i >> e.j >> e.value)) parse_error(line, "expected 'i j value'");
    std::string rest;
    if (fields >> rest) parse_error(line, "trailing content '" + rest + "'");
    e.i -= index_base;
    e.j -= index_base;
    if (e.i < 0 || e.j < 0) parse_error(line, "index below base " + std::to_string(index_base));
    if (!std::isfinite(e.value)) parse_error(line, "non-finite coefficient");
    max_index = std::max({max_index, e.i, e.j});
    entries.push_back(e);
  }
  const long long n = declared_n > 0 ? declared_n : max_index + 1;
  if (n < 1) throw std::runtime_error("line " + std::to_string(line) + ": no QUBO entries");
  for (const auto& e : entries) {
    if (std::max(e.i, e.j) >= n) parse_error(e.line, "index exceeds declared dimension " + std::to_string(n));
  }
  QuboMatrix Q(static_cast<std::size_t>(n));
  for (const auto& e : entries) Q.add(static_cast<std::size_t>(e.i), static_cast<std::size_t>(e.j), e.value);
  Q.set_offset(offset);
  return Q;
}

}  // namespace fmqa
