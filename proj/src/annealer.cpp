#include "fmqa/annealer.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "fmqa/random.hpp"

namespace fmqa {

void AnnealConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("anneal config: " + what); };
  if (num_sweeps < 1 && !time_budget_ms) fail("set num_sweeps or time_budget_ms");
  if (num_sweeps < 1) fail("num_sweeps must be >= 1");
  if (num_restarts < 1) fail("num_restarts must be >= 1");
  if (!(beta_initial > 0.0) || !(beta_final > 0.0)) fail("betas must be positive");
  if (std::isnan(beta_initial) || std::isnan(beta_final)) fail("betas must not be NaN");
  if (beta_initial > beta_final) fail("beta_initial must not exceed beta_final");
  if (time_budget_ms && *time_budget_ms < 1) fail("time_budget_ms must be positive");
  if (num_threads < 1) fail("num_threads must be >= 1");
}

double incremental_delta(const QuboMatrix& Q, std::span<const std::uint8_t> x, std::size_t i) {
  if (x.size() != Q.size()) throw std::invalid_argument("incremental_delta: length mismatch");
  if (i >= x.size()) throw std::out_of_range("incremental_delta: index out of range");
  double field = Q.at(i, i);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j != i && x[j]) field += Q.at(i, j);
  }
  return x[i] ? -field : field;
}

BetaRange effective_beta_range(const QuboMatrix& Q, const AnnealConfig& config) {
  if (!config.auto_beta_range) return {config.beta_initial, config.beta_final};
  const std::size_t n = Q.size();
  double max_delta = 0.0;
  double min_scale = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double reach = std::abs(Q.at(i, i));
    double smallest = reach > 0.0 ? reach : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double q = std::abs(Q.at(i, j));
      reach += q;
      if (q > 0.0) smallest = std::min(smallest, q);
    }
    max_delta = std::max(max_delta, reach);
    min_scale = std::min(min_scale, smallest);
  }
  if (max_delta == 0.0) return {config.beta_initial, config.beta_final};
  BetaRange r{std::log(2.0) / max_delta, std::log(100.0) / min_scale};
  if (!(r.final > r.initial)) r.final = r.initial;
  return r;
}

namespace {

using Clock = std::chrono::steady_clock;

// exp(-40) ~ 4e-18 is below the resolution of a double uniform draw.
constexpr double kRejectExponent = 40.0;

// field += row, or -= row; one rounding per element on every target.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
__attribute__((target_clones("avx2", "default")))
#endif
void add_row(double* field, const double* row, std::size_t n, bool subtract) {
  if (subtract) {
    for (std::size_t j = 0; j < n; ++j) field[j] -= row[j];
  } else {
    for (std::size_t j = 0; j < n; ++j) field[j] += row[j];
  }
}


// Full symmetric coupling rows (zero diagonal) plus the diagonal, for O(N) field updates.
struct DenseModel {
  explicit DenseModel(const QuboMatrix& Q) : n(Q.size()), coupling(n * n, 0.0), diag(n) {
    for (std::size_t i = 0; i < n; ++i) {
      diag[i] = Q.at(i, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double q = Q.at(i, j);
        coupling[i * n + j] = q;
        coupling[j * n + i] = q;
      }
    }
  }
  std::size_t n;
  std::vector<double> coupling;
  std::vector<double> diag;
};

std::vector<double> beta_schedule(const QuboMatrix& Q, AnnealConfig config) {
  const auto range = effective_beta_range(Q, config);
  config.beta_initial = range.initial;
  config.beta_final = range.final;
  const auto sweeps = static_cast<std::size_t>(config.num_sweeps);
  std::vector<double> betas(sweeps, config.beta_initial);
  if (sweeps == 1 || config.beta_initial == config.beta_final) {
    std::fill(betas.begin(), betas.end(), config.beta_final);
    return betas;
  }
  if (std::isinf(config.beta_final)) {
    std::fill(betas.begin() + 1, betas.end(), config.beta_final);
    return betas;
  }
  const double ratio = std::log(config.beta_final / config.beta_initial);
  for (std::size_t s = 0; s < sweeps; ++s) {
    betas[s] = config.beta_initial * std::exp(ratio * static_cast<double>(s) / static_cast<double>(sweeps - 1));
  }
  betas.back() = config.beta_final;
  return betas;
}

detail::ChainOutcome anneal(const DenseModel& model, const QuboMatrix& Q, const AnnealConfig& config,
                            const std::vector<double>& betas, std::size_t chain,
                            std::optional<Clock::time_point> deadline, const std::atomic<bool>* stop,
                            bool record_trace) {
  const std::size_t n = model.n;
  Rng rng(derive_seed(config.seed, "anneal-chain", chain));
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  BitVector x(n);
  for (auto& b : x) b = static_cast<std::uint8_t>(coin(rng));

  // field[i] = Q_ii + sum_{j != i} Q_ij x_j; flipping i changes energy by +/- field[i].
  std::vector<double> field(model.diag);
  for (std::size_t j = 0; j < n; ++j) {
    if (!x[j]) continue;
    const double* row = &model.coupling[j * n];
    for (std::size_t i = 0; i < n; ++i) field[i] += row[i];
  }

  detail::ChainOutcome out;
  double current = energy(Q, x);
  out.best_bits = x;
  out.best_energy = current;

  for (std::size_t s = 0; s < betas.size(); ++s) {
    if (deadline && Clock::now() >= *deadline) break;
    if (stop && stop->load(std::memory_order_relaxed)) break;
    const double beta = betas[s];
    const bool greedy = std::isinf(beta);
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = x[i] ? -field[i] : field[i];
      bool accept;
      if (delta < 0.0) {
        accept = true;
      } else if (greedy || beta * delta > kRejectExponent) {
        accept = false;
      } else {
        accept = detail::metropolis_accept(beta * delta, unit(rng));
      }
      if (!accept) continue;
      add_row(field.data(), &model.coupling[i * n], n, x[i] != 0);
      x[i] ^= 1;
      current += delta;
      if (record_trace) out.accepted_deltas.push_back(delta);
      if (current < out.best_energy) {
        out.best_energy = current;
        out.best_bits = x;
      }
    }
    if (record_trace) out.best_per_sweep.push_back(out.best_energy);
    if (s + 1 == betas.size()) out.completed = true;
  }
  out.final_bits = std::move(x);
  out.best_energy = energy(Q, out.best_bits);
  return out;
}

}  // namespace

namespace detail {

// u < exp(-x) for x >= 0. Polynomial bounds settle most draws without exp:
// 1 - x + x^2/2 - x^3/6 <= exp(-x) <= 1 / (1 + x + x^2/2). The 1e-14 margins
// exceed the rounding error of either side, so the outcome matches exp.
bool metropolis_accept(double x, double u) {
  const double x2 = 0.5 * x * x;
  if (u < 1.0 - x + x2 - x2 * x * (1.0 / 3.0) - 1e-14) return true;
  if (u * (1.0 + x + x2) >= 1.0 + 1e-14) return false;
  return u < std::exp(-x);
}

ChainOutcome run_chain(const QuboMatrix& Q, const AnnealConfig& config, std::size_t chain,
                       bool record_trace) {
  config.validate();
  const DenseModel model(Q);
  return anneal(model, Q, config, beta_schedule(Q, config), chain, std::nullopt, nullptr, record_trace);
}

}  // namespace detail

SampleResult sample(const QuboMatrix& Q, const AnnealConfig& config) {
  config.validate();
  if (Q.size() < 1) throw std::invalid_argument("sample: empty QUBO");
  const DenseModel model(Q);
  const auto betas = beta_schedule(Q, config);
  std::optional<Clock::time_point> deadline;
  if (config.time_budget_ms) deadline = Clock::now() + std::chrono::milliseconds(*config.time_budget_ms);

  const auto chains = static_cast<std::size_t>(config.num_restarts);
  std::vector<detail::ChainOutcome> outcomes(chains);
  std::atomic<bool> stop{false};
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t c = first; c < chains; c += stride) {
      if (stop.load(std::memory_order_relaxed)) break;
      outcomes[c] = anneal(model, Q, config, betas, c, deadline, &stop, false);
      if (!outcomes[c].completed) stop.store(true, std::memory_order_relaxed);
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.num_threads), chains);
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }

  SampleResult result;
  bool have = false;
  for (std::size_t c = 0; c < chains; ++c) {
    const auto& o = outcomes[c];
    if (o.best_bits.empty()) continue;
    if (o.completed) ++result.restarts_run;
    if (!have || o.best_energy < result.best_energy) {
      result.best_bits = o.best_bits;
      result.best_energy = o.best_energy;
      have = true;
    }
  }
  result.budget_exhausted = result.restarts_run < config.num_restarts;
  if (!have) {
    // Deadline passed before chain 0 could even start; fall back to its random start.
    Rng rng(derive_seed(config.seed, "anneal-chain", 0));
    std::uniform_int_distribution<int> coin(0, 1);
    result.best_bits.resize(Q.size());
    for (auto& b : result.best_bits) b = static_cast<std::uint8_t>(coin(rng));
    result.best_energy = energy(Q, result.best_bits);
  }
  return result;
}

SampleResult sample(const QuboMatrix& Q, const AnnealConfig& config, const DiscretizationGrid& grid) {
  SampleResult r = sample(Q, config);
  r.feasible = validate_onehot(r.best_bits, grid);
  return r;
}

SampleResult brute_force_min(const QuboMatrix& Q) {
  const std::size_t n = Q.size();
  if (n < 1) throw std::invalid_argument("brute_force_min: empty QUBO");
  if (n > kBruteForceMaxBits) {
    throw CapacityError("brute_force_min: N = " + std::to_string(n) + " exceeds the cap of " +
                        std::to_string(kBruteForceMaxBits));
  }
  const DenseModel model(Q);
  std::vector<double> field(model.diag);
  BitVector x(n, 0);
  auto as_integer = [n](const BitVector& bits) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v = (v << 1) | bits[i];
    return v;
  };

  double current = 0.0;
  BitVector best = x;
  double best_energy = 0.0;
  std::uint64_t best_value = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t step = 1; step < total; ++step) {
    // Gray-code walk: flip the bit at the position of the lowest set bit of `step`.
    const auto i = static_cast<std::size_t>(std::countr_zero(step));
    current += x[i] ? -field[i] : field[i];
    const double sign = x[i] ? -1.0 : 1.0;
    x[i] ^= 1;
    const double* row = &model.coupling[i * n];
    for (std::size_t j = 0; j < n; ++j) field[j] += sign * row[j];

    const double tol = 1e-12 * std::max(1.0, std::abs(best_energy));
    if (current < best_energy - tol) {
      best = x;
      best_energy = current;
      best_value = as_integer(x);
    } else if (current <= best_energy + tol) {
      // Near-tie: settle on exact energies, then the integer tie-break.
      const double exact = energy(Q, x);
      const double exact_best = energy(Q, best);
      const std::uint64_t value = as_integer(x);
      if (exact < exact_best || (exact == exact_best && value < best_value)) {
        best = x;
        best_energy = exact;
        best_value = value;
      }
    }
  }
  SampleResult r;
  r.best_bits = std::move(best);
  r.best_energy = energy(Q, r.best_bits);
  r.restarts_run = 1;
  return r;
}

}  // namespace fmqa
