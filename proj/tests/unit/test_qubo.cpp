#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fmqa/qubo.hpp"

using namespace fmqa;

namespace {

FmParams random_params(std::size_t n, int k, Rng& rng) {
  std::normal_distribution<double> normal;
  auto p = FmParams::zeros(n, k);
  p.bias = normal(rng);
  for (auto& w : p.linear) w = normal(rng);
  for (auto& v : p.factors) v = normal(rng);
  return p;
}

BitVector bits_of(std::uint64_t code, std::size_t n) {
  BitVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((code >> i) & 1);
  return x;
}

// Full double loop over the symmetric interpretation.
double naive_energy(const QuboMatrix& Q, const BitVector& x) {
  double e = 0.0;
  for (std::size_t i = 0; i < Q.size(); ++i)
    for (std::size_t j = i; j < Q.size(); ++j) e += Q.at(i, j) * x[i] * x[j];
  return e;
}

DiscretizationGrid unit_grid(std::size_t n, int m) { return DiscretizationGrid(std::vector<Bounds>(n, {0.0, 1.0}), m); }

// Every one-hot point of the grid.
std::vector<IndexVector> all_points(const DiscretizationGrid& g) {
  std::vector<IndexVector> out;
  IndexVector q(g.num_vars(), 0);
  while (true) {
    out.push_back(q);
    std::size_t j = 0;
    while (j < q.size() && ++q[j] == g.levels()) q[j++] = 0;
    if (j == q.size()) break;
  }
  return out;
}

}  // namespace

TEST(FromFm, HandExample) {
  auto p = FmParams::zeros(2, 1);
  p.bias = 0.5;
  p.linear = {1, 2};
  p.factors = {3, 4};
  const auto Q = from_fm(p);
  EXPECT_EQ(Q.at(0, 0), 1.0);
  EXPECT_EQ(Q.at(1, 1), 2.0);
  EXPECT_EQ(Q.at(0, 1), 12.0);
  EXPECT_EQ(Q.at(1, 0), 12.0);
  EXPECT_EQ(Q.offset(), 0.5);
}

TEST(FromFm, ZeroParamsGiveZeroMatrix) {
  const auto Q = from_fm(FmParams::zeros(5, 3));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(Q.at(i, j), 0.0);
  EXPECT_EQ(Q.offset(), 0.0);
}

TEST(FromFm, EnergyIdentityExhaustive) {
  Rng rng(1);
  for (std::size_t n : {1u, 2u, 5u, 9u, 12u}) {
    const auto p = random_params(n, 3, rng);
    const auto Q = from_fm(p);
    for (std::uint64_t c = 0; c < (std::uint64_t{1} << n); ++c) {
      const auto x = bits_of(c, n);
      EXPECT_NEAR(energy(Q, x) + p.bias, predict(p, x), 1e-9 * std::max(1.0, std::abs(predict(p, x))));
    }
  }
}

TEST(FromFm, EnergyIdentityRandomLarge) {
  Rng rng(2);
  const auto p = random_params(300, 6, rng);
  const auto Q = from_fm(p);
  for (int t = 0; t < 50; ++t) {
    BitVector x(300);
    for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1);
    EXPECT_NEAR(energy(Q, x) + p.bias, predict(p, x), 1e-9 * std::max(1.0, std::abs(predict(p, x))));
  }
}

TEST(Energy, Examples) {
  Rng rng(3);
  QuboMatrix Q(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i; j < 6; ++j) Q.set(i, j, u(rng));
  Q.set_offset(7.0);
  EXPECT_EQ(energy(Q, BitVector(6, 0)), 0.0);
  for (std::size_t i = 0; i < 6; ++i) {
    BitVector e(6, 0);
    e[i] = 1;
    EXPECT_EQ(energy(Q, e), Q.at(i, i));
  }
  EXPECT_THROW(energy(Q, BitVector(5, 0)), std::invalid_argument);
}

TEST(Energy, MatchesNaiveDoubleLoop) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng() % 30;
    QuboMatrix Q(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) Q.set(i, j, u(rng));
    BitVector x(n);
    for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1);
    EXPECT_NEAR(energy(Q, x), naive_energy(Q, x), 1e-12 * std::max(1.0, std::abs(naive_energy(Q, x))));
  }
}

TEST(QuboMatrix, SymmetricAccessAndCanonicalStorage) {
  QuboMatrix Q(3);
  Q.add(2, 0, 1.5);
  Q.add(0, 2, 0.5);
  EXPECT_EQ(Q.at(0, 2), 2.0);
  EXPECT_EQ(Q.at(2, 0), 2.0);
  Q.set(1, 0, -1.0);
  EXPECT_EQ(Q.at(0, 1), -1.0);
  EXPECT_TRUE(Q.all_finite());
  Q.set(1, 1, std::numeric_limits<double>::quiet_NaN());
  EXPECT_FALSE(Q.all_finite());
}

TEST(Equivalence, ArgminSetsCoincideOnOneHotPoints) {
  Rng rng(5);
  for (std::size_t nx = 1; nx <= 3; ++nx) {
    for (int m = 2; m <= 4; ++m) {
      const auto g = unit_grid(nx, m);
      const auto p = random_params(g.num_bits(), 3, rng);
      const auto Q = from_fm(p);
      std::set<IndexVector> by_fm, by_qubo;
      double best_fm = 1e300, best_q = 1e300;
      for (const auto& q : all_points(g)) {
        const auto x = encode(q, g);
        best_fm = std::min(best_fm, predict(p, x));
        best_q = std::min(best_q, energy(Q, x.bits()));
      }
      for (const auto& q : all_points(g)) {
        const auto x = encode(q, g);
        if (predict(p, x) <= best_fm + 1e-12) by_fm.insert(q);
        if (energy(Q, x.bits()) <= best_q + 1e-12) by_qubo.insert(q);
      }
      EXPECT_EQ(by_fm, by_qubo);
      EXPECT_NEAR(best_fm - p.bias, best_q, 1e-9);
    }
  }
}

TEST(Equivalence, ScalingWeightsByCAndFactorsBySqrtCScalesEnergy) {
  Rng rng(6);
  const auto p = random_params(10, 3, rng);
  const double c = 2.7;
  auto scaled = p;
  for (auto& w : scaled.linear) w *= c;
  for (auto& v : scaled.factors) v *= std::sqrt(c);
  const auto Q = from_fm(p), Qs = from_fm(scaled);
  std::uint64_t argmin = 0, argmin_s = 0;
  double best = 1e300, best_s = 1e300;
  for (std::uint64_t code = 0; code < 1024; ++code) {
    const auto x = bits_of(code, 10);
    const double e = energy(Q, x), es = energy(Qs, x);
    EXPECT_NEAR(es, c * e, 1e-9 * std::max(1.0, std::abs(es)));
    if (e < best) best = e, argmin = code;
    if (es < best_s) best_s = es, argmin_s = code;
  }
  EXPECT_EQ(argmin, argmin_s);
}

TEST(LambdaPen, Examples) {
  EXPECT_EQ(compute_lambda_pen(0.2), 8.0);
  EXPECT_EQ(compute_lambda_pen(9.7), 80.0);
  EXPECT_EQ(compute_lambda_pen(1.0), 8.0);
  EXPECT_EQ(compute_lambda_pen(0.0), 8.0);
  EXPECT_EQ(compute_lambda_pen(2.5), 24.0);
}

TEST(LambdaPen, RejectsNonFinite) {
  EXPECT_THROW(compute_lambda_pen(std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_THROW(compute_lambda_pen(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(compute_lambda_pen(-1.0), std::invalid_argument);
}

TEST(Penalty, StructureOfAddedTerms) {
  const auto g = unit_grid(2, 3);
  const QuboMatrix zero(6);
  const auto P = augment_penalty(zero, g, 5.0);
  EXPECT_EQ(P.offset(), 10.0);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(P.at(i, i), -5.0);
    for (std::size_t j = i + 1; j < 6; ++j) EXPECT_EQ(P.at(i, j), i / 3 == j / 3 ? 10.0 : 0.0);
  }
}

TEST(Penalty, Examples) {
  const auto g = unit_grid(2, 3);
  Rng rng(7);
  const auto p = random_params(6, 2, rng);
  const auto Q = from_fm(p);
  const double lambda = 8.0;
  const auto A = augment_penalty(Q, g, lambda);
  const double delta_offset = A.offset() - Q.offset();
  EXPECT_EQ(delta_offset, 2 * lambda);
  // Valid one-hot: the penalty contributes zero.
  const BitVector valid{0, 1, 0, 0, 0, 1};
  EXPECT_NEAR(energy(A, valid) + delta_offset, energy(Q, valid), 1e-12);
  // One empty block.
  const BitVector empty{0, 0, 0, 1, 0, 0};
  EXPECT_NEAR(energy(A, empty) + delta_offset - energy(Q, empty), lambda, 1e-12);
  // One block with two active bits.
  const BitVector two{1, 0, 1, 0, 1, 0};
  EXPECT_NEAR(energy(A, two) + delta_offset - energy(Q, two), lambda, 1e-12);
}

TEST(Penalty, PreservesFeasibleAndRaisesInfeasible) {
  const auto g = unit_grid(3, 3);
  Rng rng(8);
  const auto p = random_params(9, 3, rng);
  const auto Q = from_fm(p);
  const double lambda = 16.0;
  const auto A = augment_penalty(Q, g, lambda);
  const double d = A.offset() - Q.offset();
  for (std::uint64_t code = 0; code < 512; ++code) {
    const auto x = bits_of(code, 9);
    const double lifted = energy(A, x) + d - energy(Q, x);
    if (validate_onehot(x, g)) {
      EXPECT_NEAR(lifted, 0.0, 1e-12);
    } else {
      EXPECT_GE(lifted, lambda - 1e-12);
    }
  }
}

TEST(Coordinate, RoundTrip) {
  Rng rng(9);
  const auto Q = from_fm(random_params(7, 2, rng));
  std::stringstream s;
  write_coordinate(s, Q);
  const auto R = read_coordinate(s);
  ASSERT_EQ(R.size(), Q.size());
  EXPECT_EQ(R.offset(), Q.offset());
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(R.at(i, j), Q.at(i, j));
}

TEST(Coordinate, OneBasedSingleEntry) {
  std::istringstream s("1 1 -5.0\n");
  const auto Q = read_coordinate(s, 1);
  ASSERT_EQ(Q.size(), 1u);
  EXPECT_EQ(Q.at(0, 0), -5.0);
}

TEST(Coordinate, DimensionFromLargestIndexAndLowerEntriesFold) {
  std::istringstream s("# a comment\n2 0 1.5\n0 2 0.5\n\n1 1 3\n");
  const auto Q = read_coordinate(s);
  ASSERT_EQ(Q.size(), 3u);
  EXPECT_EQ(Q.at(0, 2), 2.0);
  EXPECT_EQ(Q.at(1, 1), 3.0);
}

TEST(Coordinate, ErrorsNameTheLine) {
  auto message = [](const std::string& text, int base = 0) {
    std::istringstream s(text);
    try {
      read_coordinate(s, base);
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("0 0 1\n0 x 2\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("0 0 1\n0 1\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("# n 2\n0 0 1\n3 1 1\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("0 0 1 7\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("0 0 1\n", 1).find("line 1"), std::string::npos);
}
