#include "fmqa/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "fmqa/qubo.hpp"
#include "fmqa/random.hpp"

namespace fmqa {

void LoopConfig::validate() const {
  if (rank < 1) throw std::invalid_argument("loop config: K must be >= 1");
  if (design.n_samples < 1) throw std::invalid_argument("loop config: N0 must be >= 1");
  if (budget <= design.n_samples) {
    throw std::invalid_argument("loop config: budget (" + std::to_string(budget) + ") must exceed N0 (" +
                                std::to_string(design.n_samples) + ")");
  }
  train.validate();
  anneal.validate();
}

IndexVector dedupe_perturb(const IndexVector& candidate, const EvaluatedSet& evaluated,
                           const DiscretizationGrid& grid, Rng& rng, int* steps) {
  if (!grid.valid(candidate)) throw std::out_of_range("dedupe_perturb: candidate invalid for grid");
  if (steps) *steps = 0;
  if (!evaluated.contains(candidate)) return candidate;
  if (evaluated.size() >= grid.cardinality()) {
    throw ExhaustionError("every one of the " + std::to_string(grid.cardinality()) +
                          " grid points has been evaluated");
  }
  std::uniform_int_distribution<int> shift(-1, 1);
  IndexVector q = candidate;
  int rounds = 0;
  do {
    for (auto& m : q) m = std::clamp(m + shift(rng), 0, grid.levels() - 1);
    ++rounds;
  } while (evaluated.contains(q));
  if (steps) *steps = rounds;
  return q;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string loop_fingerprint(const LoopConfig& c, const std::string& problem, const DiscretizationGrid& grid) {
  char text[512];
  std::snprintf(text, sizeof text,
                "%s|nx=%zu|M=%d|budget=%d|design=%s/%d/%llu|K=%d|lr=%.17g|b1=%.17g|b2=%.17g|eps=%.17g|wd=%.17g|"
                "bs=%d|ep=%d|tseed=%llu|decay_bias=%d|sweeps=%d|restarts=%d|beta=%.17g..%.17g/%d|tb=%d|aseed=%llu|seed=%llu",
                problem.c_str(), grid.num_vars(), grid.levels(), c.budget,
                std::string(to_string(c.design.method)).c_str(), c.design.n_samples,
                static_cast<unsigned long long>(c.design.seed), c.rank, c.train.learning_rate, c.train.beta1,
                c.train.beta2, c.train.epsilon, c.train.weight_decay, c.train.batch_size, c.train.epochs,
                static_cast<unsigned long long>(c.train.seed), c.train.decay_bias ? 1 : 0, c.anneal.num_sweeps,
                c.anneal.num_restarts, c.anneal.beta_initial, c.anneal.beta_final, c.anneal.auto_beta_range ? 1 : 0, c.anneal.time_budget_ms.value_or(0),
                static_cast<unsigned long long>(c.anneal.seed), static_cast<unsigned long long>(c.seed));
  std::string s = text;
  for (const auto& b : grid.bounds()) {
    std::snprintf(text, sizeof text, "|%.17g,%.17g", b.lower, b.upper);
    s += text;
  }
  return s;
}

// Shared bookkeeping for FMQA and random search.
class Recorder {
 public:
  Recorder(const BlackBoxProblem& problem, const DiscretizationGrid& grid, RunRecord& record)
      : problem_(problem), grid_(grid), record_(record), counts_(grid.num_bits(), 0) {}

  void evaluate_point(const IndexVector& q) {
    const auto start = Clock::now();
    const auto z = decode_indices(q, grid_);
    const double internal = evaluate(problem_, z, ledger_);
    record_.timing.evaluate_ms += elapsed_ms(start);

    const double natural = ledger_.entries().back().raw;
    record_.raw_values.push_back(natural);
    const double best = record_.best_trajectory.empty() || problem_.better(natural, record_.best_trajectory.back())
                            ? natural
                            : record_.best_trajectory.back();
    record_.best_trajectory.push_back(best);
    record_.evaluated.push_back(q);
    auto x = encode(q, grid_);
    for (std::size_t i : x.active()) ++counts_[i];
    record_.final_dataset.add(std::move(x), internal);
    evaluated_.insert(q);

    const std::size_t n = ledger_.count();
    const bool dense = grid_.num_bits() <= kDenseSnapshotBits;
    if (dense || n % 5 == 0 || n == static_cast<std::size_t>(record_.n_initial) ||
        n == static_cast<std::size_t>(record_.budget)) {
      record_.snapshots.push_back({n, counts_});
    }
  }

  std::size_t count() const { return ledger_.count(); }
  const EvaluatedSet& evaluated() const { return evaluated_; }
  void finish() { record_.failures = ledger_.failures(); }

 private:
  const BlackBoxProblem& problem_;
  const DiscretizationGrid& grid_;
  RunRecord& record_;
  EvalLedger ledger_;
  EvaluatedSet evaluated_;
  std::vector<int> counts_;
};

RunRecord make_record(const BlackBoxProblem& problem, const DiscretizationGrid& grid, const std::string& label,
                      std::uint64_t seed, int budget, int n_initial) {
  if (grid.num_vars() != problem.num_vars()) {
    throw std::invalid_argument("grid has " + std::to_string(grid.num_vars()) + " variables, problem '" +
                                problem.name + "' has " + std::to_string(problem.num_vars()));
  }
  RunRecord r;
  r.problem = problem.name;
  r.method = label;
  r.direction = problem.direction;
  r.seed = seed;
  r.num_vars = grid.num_vars();
  r.levels = grid.levels();
  r.budget = budget;
  r.n_initial = n_initial;
  return r;
}

}  // namespace

FmParams train_for_iteration(const Dataset& data, const LoopConfig& config, const DiscretizationGrid& grid,
                             std::size_t iteration) {
  Rng rng(derive_seed(mix64(config.seed) ^ config.train.seed, "train", iteration));
  return train(data, config.train, grid, config.rank, rng);
}

RunRecord run(const BlackBoxProblem& problem, const DiscretizationGrid& grid, const LoopConfig& config,
              const std::string& method_label) {
  config.validate();
  RunRecord record = make_record(problem, grid, method_label, config.seed, config.budget, config.design.n_samples);
  record.config_hash = hex64(hash_tag(loop_fingerprint(config, problem.name, grid)));
  if (static_cast<std::size_t>(config.budget) > grid.cardinality()) {
    throw ExhaustionError("budget " + std::to_string(config.budget) + " exceeds the " +
                          std::to_string(grid.cardinality()) + " distinct grid points");
  }
  record.warnings = design_warnings(grid, config.design);

  Recorder recorder(problem, grid, record);
  Rng repair_rng(derive_seed(config.seed, "repair"));

  auto start = Clock::now();
  const auto design = make_design(grid, config.design);
  record.timing.design_ms = elapsed_ms(start);
  for (const auto& q : design) {
    recorder.evaluate_point(dedupe_perturb(q, recorder.evaluated(), grid, repair_rng));
  }

  for (std::size_t iteration = 0; recorder.count() < static_cast<std::size_t>(config.budget); ++iteration) {
    try {
      start = Clock::now();
      const FmParams params = train_for_iteration(record.final_dataset, config, grid, iteration);
      record.timing.train_ms += elapsed_ms(start);
      if (config.on_model) config.on_model(iteration, params);

      double max_abs = 0.0;
      for (double y : record.final_dataset.targets) max_abs = std::max(max_abs, std::abs(y));
      const double lambda = compute_lambda_pen(max_abs);
      const QuboMatrix Q = augment_penalty(from_fm(params), grid, lambda);

      AnnealConfig anneal = config.anneal;
      anneal.seed = derive_seed(mix64(config.seed) ^ config.anneal.seed, "anneal", iteration);
      start = Clock::now();
      const SampleResult sampled = sample(Q, anneal, grid);
      record.timing.sample_ms += elapsed_ms(start);

      int steps = 0;
      const IndexVector repaired = repair_decode(sampled.best_bits, grid, repair_rng);
      const IndexVector candidate = dedupe_perturb(repaired, recorder.evaluated(), grid, repair_rng, &steps);

      record.lambda_pen.push_back(lambda);
      record.sampler_feasible.push_back(sampled.feasible ? 1 : 0);
      record.dedupe_steps.push_back(steps);
      recorder.evaluate_point(candidate);
    } catch (const ExhaustionError& e) {
      throw ExhaustionError("iteration " + std::to_string(iteration) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(iteration) + ": " + e.what());
    }
  }
  recorder.finish();
  return record;
}

RunRecord random_search(const BlackBoxProblem& problem, const DiscretizationGrid& grid, int budget,
                        std::uint64_t seed, int n_initial, const std::string& method_label) {
  if (budget < 1) throw std::invalid_argument("random search needs budget >= 1");
  RunRecord record = make_record(problem, grid, method_label, seed, budget, std::clamp(n_initial, 0, budget));
  char text[128];
  std::snprintf(text, sizeof text, "%s|random|nx=%zu|M=%d|budget=%d|seed=%llu", problem.name.c_str(),
                grid.num_vars(), grid.levels(), budget, static_cast<unsigned long long>(seed));
  record.config_hash = hex64(hash_tag(text));
  Recorder recorder(problem, grid, record);
  Rng rng(derive_seed(seed, "random-search"));
  std::uniform_int_distribution<int> level(0, grid.levels() - 1);
  IndexVector q(grid.num_vars());
  for (int e = 0; e < budget; ++e) {
    for (auto& m : q) m = level(rng);
    recorder.evaluate_point(q);
  }
  recorder.finish();
  return record;
}

Summary aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  const auto& first = records.front();
  for (const auto& r : records) {
    if (r.budget != first.budget || r.best_trajectory.size() != first.best_trajectory.size()) {
      throw std::invalid_argument("aggregate: records have mismatched budgets");
    }
    if (r.n_initial != first.n_initial) throw std::invalid_argument("aggregate: records have mismatched N0");
  }
  if (first.best_trajectory.empty()) throw std::invalid_argument("aggregate: empty trajectories");

  Summary s;
  s.method = first.method;
  s.trials = records.size();
  s.budget = first.budget;
  s.n_initial = first.n_initial;
  s.direction = first.direction;
  const std::size_t T = first.best_trajectory.size();
  const double n = static_cast<double>(records.size());

  auto mean_std = [&](std::size_t e) {
    double mean = 0.0;
    for (const auto& r : records) mean += r.best_trajectory[e];
    mean /= n;
    double ss = 0.0;
    for (const auto& r : records) ss += (r.best_trajectory[e] - mean) * (r.best_trajectory[e] - mean);
    const double sd = records.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return std::pair{mean, sd};
  };

  s.mean.resize(T);
  s.stddev.resize(T);
  for (std::size_t e = 0; e < T; ++e) std::tie(s.mean[e], s.stddev[e]) = mean_std(e);
  const std::size_t init = static_cast<std::size_t>(std::max(first.n_initial, 1)) - 1;
  s.initial_mean = s.mean[init];
  s.initial_std = s.stddev[init];
  s.final_mean = s.mean[T - 1];
  s.final_std = s.stddev[T - 1];
  s.gain = s.final_mean - s.initial_mean;
  return s;
}

}  // namespace fmqa
