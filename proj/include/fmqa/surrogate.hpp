#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fmqa/encoding.hpp"
#include "fmqa/random.hpp"

namespace fmqa {

/// Second-order factorization machine parameters.
///
///   f(x) = bias + sum_i linear[i] x_i + sum_{i<j} <v_i, v_j> x_i x_j
///
/// `factors` is row-major N x K: row i is v_i. The same shape is reused for
/// gradients and optimizer moments.
struct FmParams {
  double bias = 0.0;
  std::vector<double> linear;
  std::vector<double> factors;
  std::size_t num_bits = 0;
  int rank = 0;

  static FmParams zeros(std::size_t num_bits, int rank);

  double& v(std::size_t i, int k) { return factors[i * static_cast<std::size_t>(rank) + k]; }
  double v(std::size_t i, int k) const { return factors[i * static_cast<std::size_t>(rank) + k]; }
  std::span<const double> row(std::size_t i) const {
    return {factors.data() + i * static_cast<std::size_t>(rank), static_cast<std::size_t>(rank)};
  }

  bool all_finite() const;

  /// Flat layout used in run-record snapshots: bias, linear[0..N), factors row-major.
  std::vector<double> flatten() const;
};

/// Training pairs (one-hot input, internal minimization target).
struct Dataset {
  std::vector<OneHotVector> inputs;
  std::vector<double> targets;

  void add(OneHotVector x, double target) {
    inputs.push_back(std::move(x));
    targets.push_back(target);
  }
  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
};

struct TrainConfig {
  double learning_rate = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  int batch_size = 8;
  int epochs = 500;
  std::uint64_t seed = 0;
  /// Apply weight decay to the bias as well. Off by default.
  bool decay_bias = false;

  /// Throws std::invalid_argument on out-of-range hyperparameters.
  void validate() const;
};

/// Bound of the Xavier-uniform draw for the linear weights (fan_in = N, fan_out = 1).
double xavier_bound(std::size_t num_bits);

/// Factors ~ N(0, 1), linear ~ U[-a, a] with a = xavier_bound(N), bias = 0.
FmParams init_params(std::size_t num_bits, int rank, Rng& rng);

/// O(KN) evaluation over an arbitrary binary vector.
double predict(const FmParams& p, std::span<const std::uint8_t> x);
/// O(K n_x) evaluation over the active bits of a one-hot vector.
double predict(const FmParams& p, const OneHotVector& x);

/// d f(x) / d theta scaled by `residual_weight`.
FmParams gradient(const FmParams& p, std::span<const std::uint8_t> x, double residual_weight);
/// Accumulating form: out += gradient(p, x, residual_weight), without allocating N x K.
void add_gradient(const FmParams& p, std::span<const std::uint8_t> x, double residual_weight, FmParams& out);

/// Mean squared error over the dataset. Throws on an empty dataset.
double loss(const FmParams& p, const Dataset& data);

/// Gradient of the MSE restricted to `rows` of the dataset:
///   2/|rows| * sum_d (f(x_d) - y_d) * d f(x_d) / d theta.
/// An empty `rows` means the full dataset.
FmParams loss_gradient(const FmParams& p, const Dataset& data, std::span<const std::size_t> rows = {});

/// Decoupled-weight-decay Adam. Moments start at zero and the step counter is global.
class AdamW {
 public:
  AdamW(const TrainConfig& config, std::size_t num_bits, int rank);

  void step(FmParams& params, const FmParams& grad);
  long long steps() const { return t_; }

 private:
  double update(double theta, double g, double& m, double& v, bool decay) const;

  TrainConfig config_;
  FmParams m_;
  FmParams v_;
  long long t_ = 0;
  double bias1_ = 1.0;
  double bias2_ = 1.0;
};

struct TrainResult {
  FmParams params;
  FmParams initial;
  long long steps = 0;
};

/// Fresh initialization followed by `epochs` passes of shuffled mini-batch AdamW.
TrainResult train_detailed(const Dataset& data, const TrainConfig& config,
                           const DiscretizationGrid& grid, int rank, Rng& rng);

FmParams train(const Dataset& data, const TrainConfig& config, const DiscretizationGrid& grid,
               int rank, Rng& rng);

}  // namespace fmqa
