#include "fmqa/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fmqa {

FmParams FmParams::zeros(std::size_t num_bits, int rank) {
  FmParams p;
  p.num_bits = num_bits;
  p.rank = rank;
  p.linear.assign(num_bits, 0.0);
  p.factors.assign(num_bits * static_cast<std::size_t>(rank), 0.0);
  return p;
}

bool FmParams::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::isfinite(bias) && std::all_of(linear.begin(), linear.end(), finite) &&
         std::all_of(factors.begin(), factors.end(), finite);
}

std::vector<double> FmParams::flatten() const {
  std::vector<double> out;
  out.reserve(1 + linear.size() + factors.size());
  out.push_back(bias);
  out.insert(out.end(), linear.begin(), linear.end());
  out.insert(out.end(), factors.begin(), factors.end());
  return out;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
}

double xavier_bound(std::size_t num_bits) {
  return std::sqrt(6.0 / (static_cast<double>(num_bits) + 1.0));
}

FmParams init_params(std::size_t num_bits, int rank, Rng& rng) {
  if (num_bits < 1 || rank < 1) throw std::invalid_argument("init_params needs N >= 1 and K >= 1");
  FmParams p = FmParams::zeros(num_bits, rank);
  const double a = xavier_bound(num_bits);
  std::uniform_real_distribution<double> uniform(-a, a);
  for (auto& w : p.linear) w = uniform(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& f : p.factors) f = normal(rng);
  return p;
}

namespace {

void check_length(const FmParams& p, std::size_t n) {
  if (n != p.num_bits) {
    throw std::invalid_argument("input has " + std::to_string(n) + " bits, model expects " +
                                std::to_string(p.num_bits));
  }
}

// Per-factor sums s_k = sum_i v_{i,k} x_i over the active bits.
template <class ActiveRange>
double predict_active(const FmParams& p, const ActiveRange& active, std::vector<double>& sums) {
  const int K = p.rank;
  sums.assign(static_cast<std::size_t>(K), 0.0);
  double out = p.bias;
  double squares = 0.0;
  for (std::size_t i : active) {
    out += p.linear[i];
    for (int k = 0; k < K; ++k) {
      const double v = p.v(i, k);
      sums[k] += v;
      squares += v * v;
    }
  }
  double pair = 0.0;
  for (int k = 0; k < K; ++k) pair += sums[k] * sums[k];
  return out + 0.5 * (pair - squares);
}

}  // namespace

double predict(const FmParams& p, std::span<const std::uint8_t> x) {
  check_length(p, x.size());
  const int K = p.rank;
  double out = p.bias;
  double pair = 0.0;
  for (int k = 0; k < K; ++k) {
    double sum = 0.0;
    double squares = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!x[i]) continue;
      const double v = p.v(i, k);
      sum += v;
      squares += v * v;
    }
    pair += sum * sum - squares;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) out += p.linear[i];
  }
  return out + 0.5 * pair;
}

double predict(const FmParams& p, const OneHotVector& x) {
  check_length(p, x.size());
  std::vector<double> sums;
  return predict_active(p, x.active(), sums);
}

void add_gradient(const FmParams& p, std::span<const std::uint8_t> x, double residual_weight, FmParams& out) {
  check_length(p, x.size());
  if (out.num_bits != p.num_bits || out.rank != p.rank) throw std::invalid_argument("add_gradient: shape mismatch");
  const int K = p.rank;
  std::vector<double> sums(static_cast<std::size_t>(K), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    for (int k = 0; k < K; ++k) sums[k] += p.v(i, k);
  }
  out.bias += residual_weight;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    out.linear[i] += residual_weight;
    for (int k = 0; k < K; ++k) out.v(i, k) += residual_weight * (sums[k] - p.v(i, k));
  }
}

FmParams gradient(const FmParams& p, std::span<const std::uint8_t> x, double residual_weight) {
  check_length(p, x.size());
  FmParams g = FmParams::zeros(p.num_bits, p.rank);
  add_gradient(p, x, residual_weight, g);
  return g;
}

double loss(const FmParams& p, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("loss: empty dataset");
  if (data.targets.size() != data.inputs.size()) throw std::invalid_argument("loss: ragged dataset");
  std::vector<double> sums;
  double total = 0.0;
  for (std::size_t d = 0; d < data.size(); ++d) {
    check_length(p, data.inputs[d].size());
    const double r = predict_active(p, data.inputs[d].active(), sums) - data.targets[d];
    total += r * r;
  }
  return total / static_cast<double>(data.size());
}

namespace {

void accumulate_gradient(const FmParams& p, const Dataset& data, std::span<const std::size_t> rows,
                         FmParams& g, std::vector<double>& sums) {
  const int K = p.rank;
  const double scale = 2.0 / static_cast<double>(rows.size());
  for (std::size_t d : rows) {
    const auto& active = data.inputs[d].active();
    const double w = scale * (predict_active(p, active, sums) - data.targets[d]);
    g.bias += w;
    for (std::size_t i : active) {
      g.linear[i] += w;
      for (int k = 0; k < K; ++k) g.v(i, k) += w * (sums[k] - p.v(i, k));
    }
  }
}

}  // namespace

FmParams loss_gradient(const FmParams& p, const Dataset& data, std::span<const std::size_t> rows) {
  if (data.empty()) throw std::invalid_argument("loss_gradient: empty dataset");
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  FmParams g = FmParams::zeros(p.num_bits, p.rank);
  std::vector<double> sums;
  accumulate_gradient(p, data, rows, g, sums);
  return g;
}

AdamW::AdamW(const TrainConfig& config, std::size_t num_bits, int rank)
    : config_(config), m_(FmParams::zeros(num_bits, rank)), v_(FmParams::zeros(num_bits, rank)) {
  config_.validate();
}

double AdamW::update(double theta, double g, double& m, double& v, bool decay) const {
  m = config_.beta1 * m + (1.0 - config_.beta1) * g;
  v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
  const double m_hat = m / (1.0 - bias1_);
  const double v_hat = v / (1.0 - bias2_);
  const double shrink = decay ? 1.0 - config_.learning_rate * config_.weight_decay : 1.0;
  return theta * shrink - config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
}

void AdamW::step(FmParams& params, const FmParams& grad) {
  ++t_;
  bias1_ = std::pow(config_.beta1, static_cast<double>(t_));
  bias2_ = std::pow(config_.beta2, static_cast<double>(t_));
  params.bias = update(params.bias, grad.bias, m_.bias, v_.bias, config_.decay_bias);
  for (std::size_t i = 0; i < params.linear.size(); ++i) {
    params.linear[i] = update(params.linear[i], grad.linear[i], m_.linear[i], v_.linear[i], true);
  }
  for (std::size_t i = 0; i < params.factors.size(); ++i) {
    params.factors[i] = update(params.factors[i], grad.factors[i], m_.factors[i], v_.factors[i], true);
  }
}

TrainResult train_detailed(const Dataset& data, const TrainConfig& config,
                           const DiscretizationGrid& grid, int rank, Rng& rng) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (data.targets.size() != data.inputs.size()) throw std::invalid_argument("train: ragged dataset");
  const std::size_t N = grid.num_bits();
  for (const auto& x : data.inputs) {
    if (x.size() != N) throw std::invalid_argument("train: input length does not match grid");
  }

  TrainResult result;
  result.params = init_params(N, rank, rng);
  result.initial = result.params;
  FmParams& params = result.params;

  AdamW optimizer(config, N, rank);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  FmParams grad = FmParams::zeros(N, rank);
  std::vector<double> sums;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      grad.bias = 0.0;
      std::fill(grad.linear.begin(), grad.linear.end(), 0.0);
      std::fill(grad.factors.begin(), grad.factors.end(), 0.0);
      accumulate_gradient(params, data, std::span(order).subspan(start, stop - start), grad, sums);
      optimizer.step(params, grad);
    }
  }
  result.steps = optimizer.steps();
  return result;
}

FmParams train(const Dataset& data, const TrainConfig& config, const DiscretizationGrid& grid,
               int rank, Rng& rng) {
  return train_detailed(data, config, grid, rank, rng).params;
}

}  // namespace fmqa
