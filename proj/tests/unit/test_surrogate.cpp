#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "fmqa/surrogate.hpp"

using namespace fmqa;

namespace {

// Direct evaluation of the model equation, pair by pair.
double naive_predict(const FmParams& p, const BitVector& x) {
  double f = p.bias;
  for (std::size_t i = 0; i < p.num_bits; ++i) f += p.linear[i] * x[i];
  for (std::size_t i = 0; i < p.num_bits; ++i) {
    for (std::size_t j = i + 1; j < p.num_bits; ++j) {
      double dot = 0.0;
      for (int k = 0; k < p.rank; ++k) dot += p.v(i, k) * p.v(j, k);
      f += dot * x[i] * x[j];
    }
  }
  return f;
}

FmParams random_params(std::size_t n, int k, Rng& rng) {
  std::normal_distribution<double> normal;
  auto p = FmParams::zeros(n, k);
  p.bias = normal(rng);
  for (auto& w : p.linear) w = normal(rng);
  for (auto& v : p.factors) v = normal(rng);
  return p;
}

BitVector random_bits(std::size_t n, Rng& rng) {
  BitVector x(n);
  for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1);
  return x;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

DiscretizationGrid unit_grid(std::size_t n, int m) { return DiscretizationGrid(std::vector<Bounds>(n, {0.0, 1.0}), m); }

Dataset random_onehot_data(const DiscretizationGrid& g, std::size_t d, Rng& rng) {
  Dataset data;
  std::normal_distribution<double> normal;
  for (std::size_t r = 0; r < d; ++r) {
    IndexVector q(g.num_vars());
    for (auto& v : q) v = static_cast<int>(rng() % static_cast<unsigned>(g.levels()));
    data.add(encode(q, g), normal(rng));
  }
  return data;
}

}  // namespace

TEST(Init, BiasZeroAndLinearWithinXavierBound) {
  Rng rng(11);
  const auto p = init_params(544, 8, rng);
  EXPECT_EQ(p.bias, 0.0);
  const double a = std::sqrt(6.0 / (544.0 + 1.0));
  EXPECT_DOUBLE_EQ(xavier_bound(544), a);
  for (double w : p.linear) {
    EXPECT_GE(w, -a);
    EXPECT_LE(w, a);
  }
  ASSERT_EQ(p.factors.size(), 544u * 8u);
}

TEST(Init, FactorMomentsAreStandardNormal) {
  Rng rng(5);
  const auto p = init_params(20000, 8, rng);
  const double n = static_cast<double>(p.factors.size());
  const double mean = std::accumulate(p.factors.begin(), p.factors.end(), 0.0) / n;
  double var = 0.0;
  for (double v : p.factors) var += (v - mean) * (v - mean);
  var /= n - 1.0;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Predict, AllZerosGivesBias) {
  Rng rng(1);
  const auto p = random_params(10, 3, rng);
  EXPECT_EQ(predict(p, BitVector(10, 0)), p.bias);
}

TEST(Predict, HandExample) {
  auto p = FmParams::zeros(2, 1);
  p.linear = {1, 2};
  p.factors = {3, 4};
  EXPECT_DOUBLE_EQ(predict(p, BitVector{1, 1}), 15.0);
}

TEST(Predict, MatchesNaiveDoubleLoop) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng() % 40;
    const int k = 1 + static_cast<int>(rng() % 8);
    const auto p = random_params(n, k, rng);
    const auto x = random_bits(n, rng);
    EXPECT_LE(rel_err(predict(p, x), naive_predict(p, x)), 1e-9);
  }
}

TEST(Predict, OneHotOverloadMatchesDense) {
  Rng rng(3);
  const auto g = unit_grid(5, 6);
  const auto p = random_params(g.num_bits(), 4, rng);
  for (int t = 0; t < 50; ++t) {
    IndexVector q(5);
    for (auto& v : q) v = static_cast<int>(rng() % 6);
    const auto x = encode(q, g);
    EXPECT_LE(rel_err(predict(p, x), predict(p, x.bits())), 1e-12);
  }
}

TEST(Predict, RejectsLengthMismatch) {
  const auto p = FmParams::zeros(4, 2);
  EXPECT_THROW(predict(p, BitVector(3, 0)), std::invalid_argument);
  EXPECT_THROW(gradient(p, BitVector(5, 0), 1.0), std::invalid_argument);
}

TEST(Predict, InvariantUnderFactorColumnPermutation) {
  Rng rng(4);
  const std::size_t n = 12;
  const int k = 5;
  const auto p = random_params(n, k, rng);
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto q = p;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c) q.v(i, c) = p.v(i, perm[static_cast<std::size_t>(c)]);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_bits(n, rng);
    EXPECT_LE(rel_err(predict(p, x), predict(q, x)), 1e-12);
  }
}

TEST(Gradient, HandExample) {
  auto p = FmParams::zeros(2, 1);
  p.linear = {1, 2};
  p.factors = {3, 4};
  const auto g = gradient(p, BitVector{1, 1}, 1.0);
  EXPECT_EQ(g.bias, 1.0);
  EXPECT_EQ(g.linear, (std::vector<double>{1, 1}));
  EXPECT_DOUBLE_EQ(g.v(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(g.v(1, 0), 3.0);
}

TEST(Gradient, InactiveBitsGetExactZero) {
  Rng rng(6);
  const auto p = random_params(9, 3, rng);
  const BitVector x{1, 0, 1, 0, 0, 1, 1, 0, 0};
  const auto g = gradient(p, x, 0.7);
  for (std::size_t i = 0; i < 9; ++i) {
    if (x[i]) continue;
    EXPECT_EQ(g.linear[i], 0.0);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(g.v(i, k), 0.0);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(7);
  const double h = 1e-5;
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + rng() % 10;
    const int k = 1 + static_cast<int>(rng() % 4);
    auto p = random_params(n, k, rng);
    const auto x = random_bits(n, rng);
    const auto g = gradient(p, x, 1.0);
    auto check = [&](double& theta, double analytic) {
      const double saved = theta;
      theta = saved + h;
      const double up = predict(p, x);
      theta = saved - h;
      const double down = predict(p, x);
      theta = saved;
      EXPECT_LE(rel_err((up - down) / (2 * h), analytic), 1e-4);
    };
    check(p.bias, g.bias);
    for (std::size_t i = 0; i < n; ++i) check(p.linear[i], g.linear[i]);
    for (std::size_t i = 0; i < p.factors.size(); ++i) check(p.factors[i], g.factors[i]);
  }
}

TEST(Gradient, AddGradientAccumulates) {
  Rng rng(18);
  const auto p = random_params(7, 3, rng);
  const auto x = random_bits(7, rng);
  auto acc = FmParams::zeros(7, 3);
  add_gradient(p, x, 0.5, acc);
  add_gradient(p, x, 1.5, acc);
  const auto g = gradient(p, x, 2.0);
  for (std::size_t i = 0; i < g.factors.size(); ++i) EXPECT_DOUBLE_EQ(acc.factors[i], g.factors[i]);
  auto wrong = FmParams::zeros(7, 2);
  EXPECT_THROW(add_gradient(p, x, 1.0, wrong), std::invalid_argument);
}

TEST(Gradient, ScalesWithResidualWeight) {
  Rng rng(8);
  const auto p = random_params(6, 2, rng);
  const auto x = random_bits(6, rng);
  const auto g1 = gradient(p, x, 1.0);
  const auto g3 = gradient(p, x, -2.5);
  for (std::size_t i = 0; i < g1.factors.size(); ++i) EXPECT_DOUBLE_EQ(g3.factors[i], -2.5 * g1.factors[i]);
}

TEST(Loss, Examples) {
  const auto g = unit_grid(1, 2);
  auto p = FmParams::zeros(2, 1);
  p.bias = 3.0;
  Dataset one;
  one.add(encode({0}, g), 1.0);
  EXPECT_DOUBLE_EQ(loss(p, one), 4.0);
  Dataset exact;
  exact.add(encode({1}, g), 3.0);
  EXPECT_EQ(loss(p, exact), 0.0);
  EXPECT_THROW(loss(p, Dataset{}), std::invalid_argument);
}

TEST(Loss, EqualsMeanSquaredResidual) {
  Rng rng(9);
  const auto g = unit_grid(4, 5);
  const auto p = random_params(g.num_bits(), 3, rng);
  const auto data = random_onehot_data(g, 17, rng);
  double sum = 0.0;
  for (std::size_t d = 0; d < data.size(); ++d) {
    const double r = naive_predict(p, data.inputs[d].bits()) - data.targets[d];
    sum += r * r;
  }
  EXPECT_LE(rel_err(loss(p, data), sum / 17.0), 1e-12);
}

TEST(LossGradient, BatchedEqualsAverageOfPerSample) {
  Rng rng(10);
  const auto g = unit_grid(5, 4);
  const auto p = random_params(g.num_bits(), 3, rng);
  const auto data = random_onehot_data(g, 13, rng);
  const auto batched = loss_gradient(p, data);
  auto acc = FmParams::zeros(g.num_bits(), 3);
  for (std::size_t d = 0; d < data.size(); ++d) {
    const double w = 2.0 / 13.0 * (predict(p, data.inputs[d]) - data.targets[d]);
    const auto gs = gradient(p, data.inputs[d].bits(), w);
    acc.bias += gs.bias;
    for (std::size_t i = 0; i < acc.linear.size(); ++i) acc.linear[i] += gs.linear[i];
    for (std::size_t i = 0; i < acc.factors.size(); ++i) acc.factors[i] += gs.factors[i];
  }
  EXPECT_NEAR(batched.bias, acc.bias, 1e-10);
  for (std::size_t i = 0; i < acc.linear.size(); ++i) EXPECT_NEAR(batched.linear[i], acc.linear[i], 1e-10);
  for (std::size_t i = 0; i < acc.factors.size(); ++i) EXPECT_NEAR(batched.factors[i], acc.factors[i], 1e-10);
}

TEST(LossGradient, MatchesFiniteDifferenceOfLoss) {
  Rng rng(12);
  const auto g = unit_grid(3, 3);
  auto p = random_params(g.num_bits(), 2, rng);
  const auto data = random_onehot_data(g, 6, rng);
  const auto grad = loss_gradient(p, data);
  const double h = 1e-5;
  for (std::size_t i = 0; i < p.factors.size(); ++i) {
    const double saved = p.factors[i];
    p.factors[i] = saved + h;
    const double up = loss(p, data);
    p.factors[i] = saved - h;
    const double down = loss(p, data);
    p.factors[i] = saved;
    EXPECT_LE(rel_err((up - down) / (2 * h), grad.factors[i]), 1e-4);
  }
}

TEST(GradientCost, LinearInN) {
  // Per-sample gradient accumulation at K = 8 over N = 128 .. 4096 with every bit
  // active (the most work per call). Sizes are timed interleaved, best of 15, so
  // clock drift hits all of them alike; the mean growth per doubling must stay near 2.
  Rng rng(13);
  const int k = 8;
  std::vector<std::size_t> sizes;
  for (std::size_t n = 128; n <= 4096; n *= 2) sizes.push_back(n);
  std::vector<FmParams> params, accs;
  for (auto n : sizes) {
    params.push_back(random_params(n, k, rng));
    accs.push_back(FmParams::zeros(n, k));
  }
  std::vector<double> best(sizes.size(), 1e300);
  for (int rep = 0; rep < 15; ++rep) {
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      const BitVector x(sizes[s], 1);
      const int calls = static_cast<int>(400000 / sizes[s]);
      const auto start = std::chrono::steady_clock::now();
      for (int it = 0; it < calls; ++it) add_gradient(params[s], x, 1e-3, accs[s]);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      best[s] = std::min(best[s], secs / calls);
    }
  }
  for (const auto& a : accs) EXPECT_TRUE(a.all_finite());
  const double per_doubling = std::pow(best.back() / best.front(), 1.0 / static_cast<double>(sizes.size() - 1));
  EXPECT_LE(per_doubling, 2.3);
  EXPECT_GE(per_doubling, 1.5);  // genuinely grows with N
}

TEST(AdamW, ZeroGradientFollowsGeometricDecay) {
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.weight_decay = 0.01;
  AdamW opt(cfg, 3, 2);
  auto p = FmParams::zeros(3, 2);
  p.bias = 1.5;
  p.linear = {0.3, -0.7, 2.0};
  p.factors = {1, -1, 0.25, 4, -3, 0.5};
  const auto start = p;
  const auto zero = FmParams::zeros(3, 2);
  const double shrink = 1.0 - cfg.learning_rate * cfg.weight_decay;
  double factor = 1.0;
  for (int t = 1; t <= 1000; ++t) {
    opt.step(p, zero);
    factor *= shrink;
    for (std::size_t i = 0; i < 3; ++i) ASSERT_EQ(p.linear[i], [&] {
        double v = start.linear[i];
        for (int s = 0; s < t; ++s) v *= shrink;
        return v;
      }());
  }
  EXPECT_EQ(opt.steps(), 1000);
  EXPECT_EQ(p.bias, start.bias);  // bias is exempt by default
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(p.factors[i], start.factors[i] * std::pow(shrink, 1000), 1e-15 * std::abs(start.factors[i]) * 1000);
  }
}

TEST(AdamW, DecayBiasOption) {
  TrainConfig cfg;
  cfg.decay_bias = true;
  AdamW opt(cfg, 1, 1);
  auto p = FmParams::zeros(1, 1);
  p.bias = 2.0;
  opt.step(p, FmParams::zeros(1, 1));
  EXPECT_EQ(p.bias, 2.0 * (1.0 - cfg.learning_rate * cfg.weight_decay));
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * sign(g) (up to epsilon).
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.learning_rate = 0.1;
  AdamW opt(cfg, 1, 1);
  auto p = FmParams::zeros(1, 1);
  auto g = FmParams::zeros(1, 1);
  g.linear[0] = 3.0;
  g.factors[0] = -0.02;
  opt.step(p, g);
  EXPECT_NEAR(p.linear[0], -0.1, 1e-8);
  EXPECT_NEAR(p.factors[0], 0.1, 1e-6);
}

TEST(TrainConfig, RejectsBadValues) {
  TrainConfig c;
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.beta2 = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.weight_decay = -1e-3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Train, RejectsEmptyDataset) {
  Rng rng(0);
  EXPECT_THROW(train(Dataset{}, TrainConfig{}, unit_grid(2, 2), 2, rng), std::invalid_argument);
}

TEST(Train, DeterministicUnderSeed) {
  Rng rng(14);
  const auto g = unit_grid(3, 4);
  const auto data = random_onehot_data(g, 10, rng);
  TrainConfig cfg;
  cfg.epochs = 50;
  Rng a(77), b(77);
  const auto pa = train(data, cfg, g, 3, a);
  const auto pb = train(data, cfg, g, 3, b);
  EXPECT_EQ(pa.flatten(), pb.flatten());
}

TEST(Train, FitsRealizableTargets) {
  Rng rng(15);
  const auto g = unit_grid(3, 4);
  const auto truth = random_params(g.num_bits(), 2, rng);
  Dataset data;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        const auto x = encode({a, b, c}, g);
        data.add(x, predict(truth, x));
      }
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  Rng init(1);
  const auto res = train_detailed(data, cfg, g, 4, init);
  EXPECT_LT(loss(res.params, data), 1e-3 * loss(res.initial, data));
}

TEST(Train, FrozenBitsOnlyDecay) {
  Rng rng(16);
  const auto g = unit_grid(3, 4);
  Dataset data;
  std::normal_distribution<double> normal;
  for (int d = 0; d < 11; ++d) {
    // Level 3 never appears in any block.
    data.add(encode({static_cast<int>(rng() % 3), static_cast<int>(rng() % 3), static_cast<int>(rng() % 3)}, g),
             normal(rng));
  }
  TrainConfig cfg;
  cfg.epochs = 40;
  Rng init(3);
  const auto res = train_detailed(data, cfg, g, 3, init);
  EXPECT_EQ(res.steps, 40 * 2);
  const double shrink = 1.0 - cfg.learning_rate * cfg.weight_decay;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto i = g.bit_index(j, 3);
    double w = res.initial.linear[i];
    std::vector<double> v(res.initial.row(i).begin(), res.initial.row(i).end());
    for (long long t = 0; t < res.steps; ++t) {
      w *= shrink;
      for (auto& e : v) e *= shrink;
    }
    EXPECT_EQ(res.params.linear[i], w);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(res.params.v(i, k), v[static_cast<std::size_t>(k)]);
    EXPECT_NEAR(res.params.linear[i], res.initial.linear[i] * std::pow(shrink, 80.0), 1e-15);
  }
}
