#include "fmqa/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "fmqa/record_io.hpp"

namespace fmqa {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& source, const std::string& field, const std::string& what) {
  throw ConfigError(source + ": field '" + field + "': " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& source,
                const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) field_error(source, prefix + key, "unknown key");
  }
}

template <class T>
T get_field(const json& obj, const std::string& key, const T& fallback, const std::string& source,
            const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    field_error(source, prefix + key, "wrong type (" + std::string(obj.at(key).type_name()) + ")");
  }
}

std::vector<Bounds> parse_bounds(const json& j, const std::string& source, const std::string& field) {
  if (!j.is_array()) field_error(source, field, "expected an array of [min, max] pairs");
  std::vector<Bounds> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& pair = j[i];
    const auto name = field + "[" + std::to_string(i) + "]";
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      field_error(source, name, "expected [min, max]");
    }
    Bounds b{pair[0].get<double>(), pair[1].get<double>()};
    if (!(b.lower < b.upper)) field_error(source, name, "min must be below max");
    out.push_back(b);
  }
  if (out.empty()) field_error(source, field, "no variables");
  return out;
}

json bounds_json(const std::vector<Bounds>& bounds) {
  json out = json::array();
  for (const auto& b : bounds) out.push_back({b.lower, b.upper});
  return out;
}

TrainConfig parse_train(const json& j, const std::string& source) {
  const std::string p = "train.";
  if (!j.is_object()) field_error(source, "train", "expected an object");
  check_keys(j, {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay", "batch_size", "epochs", "seed",
                 "decay_bias"},
             source, p);
  TrainConfig t;
  t.learning_rate = get_field(j, "learning_rate", t.learning_rate, source, p);
  t.beta1 = get_field(j, "beta1", t.beta1, source, p);
  t.beta2 = get_field(j, "beta2", t.beta2, source, p);
  t.epsilon = get_field(j, "epsilon", t.epsilon, source, p);
  t.weight_decay = get_field(j, "weight_decay", t.weight_decay, source, p);
  t.batch_size = get_field(j, "batch_size", t.batch_size, source, p);
  t.epochs = get_field(j, "epochs", t.epochs, source, p);
  t.seed = get_field(j, "seed", t.seed, source, p);
  t.decay_bias = get_field(j, "decay_bias", t.decay_bias, source, p);
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    field_error(source, "train", e.what());
  }
  return t;
}

AnnealConfig parse_anneal(const json& j, const std::string& source) {
  const std::string p = "anneal.";
  if (!j.is_object()) field_error(source, "anneal", "expected an object");
  check_keys(j, {"num_sweeps", "num_restarts", "beta_initial", "beta_final", "auto_beta_range", "time_budget_ms",
                 "seed", "num_threads"},
             source, p);
  AnnealConfig a = loop_anneal_defaults();
  a.num_sweeps = get_field(j, "num_sweeps", a.num_sweeps, source, p);
  a.num_restarts = get_field(j, "num_restarts", a.num_restarts, source, p);
  a.beta_initial = get_field(j, "beta_initial", a.beta_initial, source, p);
  a.beta_final = get_field(j, "beta_final", a.beta_final, source, p);
  a.auto_beta_range = get_field(j, "auto_beta_range", a.auto_beta_range, source, p);
  if (j.contains("time_budget_ms") && !j.at("time_budget_ms").is_null()) {
    a.time_budget_ms = get_field(j, "time_budget_ms", 0, source, p);
  }
  a.seed = get_field(j, "seed", a.seed, source, p);
  a.num_threads = get_field(j, "num_threads", a.num_threads, source, p);
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    field_error(source, "anneal", e.what());
  }
  return a;
}

}  // namespace

std::string file_stem(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out;
}

ExperimentConfig parse_experiment(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");
  check_keys(root, {"problem", "grid", "methods", "baseline", "trials", "budget", "seed", "rank", "train", "anneal",
                    "output"},
             source, "");

  ExperimentConfig c;
  if (!root.contains("problem")) field_error(source, "problem", "required");
  const auto& problem = root.at("problem");
  if (problem.is_string()) {
    c.problem = problem.get<std::string>();
  } else if (problem.is_object()) {
    check_keys(problem, {"command", "timeout_ms", "name", "direction"}, source, "problem.");
    ExternalProblemSpec ext;
    if (!problem.contains("command")) field_error(source, "problem.command", "required");
    ext.command = get_field(problem, "command", ext.command, source, "problem.");
    ext.timeout_ms = get_field(problem, "timeout_ms", ext.timeout_ms, source, "problem.");
    ext.name = get_field(problem, "name", ext.name, source, "problem.");
    const auto dir = get_field(problem, "direction", std::string("minimize"), source, "problem.");
    try {
      ext.direction = parse_direction(dir);
    } catch (const std::invalid_argument& e) {
      field_error(source, "problem.direction", e.what());
    }
    if (ext.command.empty()) field_error(source, "problem.command", "empty");
    if (ext.timeout_ms <= 0) field_error(source, "problem.timeout_ms", "must be positive");
    c.problem = ext.name;
    c.external = ext;
  } else {
    field_error(source, "problem", "expected a problem name or {\"command\": ...}");
  }

  if (root.contains("grid")) {
    const auto& grid = root.at("grid");
    if (!grid.is_object()) field_error(source, "grid", "expected an object");
    check_keys(grid, {"M", "bounds"}, source, "grid.");
    c.levels = get_field(grid, "M", c.levels, source, "grid.");
    if (grid.contains("bounds")) c.bounds = parse_bounds(grid.at("bounds"), source, "grid.bounds");
  }
  if (c.levels < 2) field_error(source, "grid.M", "must be at least 2");
  if (c.external && c.bounds.empty()) field_error(source, "grid.bounds", "required for an external problem");

  c.trials = get_field(root, "trials", c.trials, source, "");
  c.budget = get_field(root, "budget", c.budget, source, "");
  c.base_seed = get_field(root, "seed", c.base_seed, source, "");
  c.rank = get_field(root, "rank", c.rank, source, "");
  c.output_dir = get_field(root, "output", c.output_dir, source, "");
  if (c.trials < 1) field_error(source, "trials", "must be at least 1");
  if (c.budget < 1) field_error(source, "budget", "must be positive");
  if (c.rank < 1) field_error(source, "rank", "must be positive");
  if (root.contains("train")) c.train = parse_train(root.at("train"), source);
  if (root.contains("anneal")) c.anneal = parse_anneal(root.at("anneal"), source);

  if (!root.contains("methods")) field_error(source, "methods", "required");
  const auto& methods = root.at("methods");
  if (!methods.is_array() || methods.empty()) field_error(source, "methods", "expected a non-empty array");
  std::set<std::string> labels, stems;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const auto prefix = "methods[" + std::to_string(i) + "].";
    const auto& m = methods[i];
    if (!m.is_object()) field_error(source, "methods[" + std::to_string(i) + "]", "expected an object");
    check_keys(m, {"label", "design", "n_initial"}, source, prefix);
    MethodSpec spec;
    const auto design = get_field(m, "design", std::string("uniform"), source, prefix);
    if (design == "random") {
      spec.random_search = true;
    } else {
      try {
        spec.design = parse_design_method(design);
      } catch (const std::invalid_argument& e) {
        field_error(source, prefix + "design", e.what());
      }
    }
    spec.label = get_field(m, "label", design, source, prefix);
    spec.n_initial = get_field(m, "n_initial", c.levels, source, prefix);
    if (spec.label.empty()) field_error(source, prefix + "label", "empty");
    if (!labels.insert(spec.label).second) field_error(source, prefix + "label", "duplicate '" + spec.label + "'");
    if (!stems.insert(file_stem(spec.label)).second) {
      field_error(source, prefix + "label", "'" + spec.label + "' collides with another label as a file name");
    }
    if (spec.n_initial < 1) field_error(source, prefix + "n_initial", "must be positive");
    if (!spec.random_search && spec.n_initial >= c.budget) {
      field_error(source, prefix + "n_initial", "must be below the budget");
    }
    if (spec.random_search && spec.n_initial > c.budget) {
      field_error(source, prefix + "n_initial", "exceeds the budget");
    }
    c.methods.push_back(spec);
  }
  c.baseline = get_field(root, "baseline", c.methods.front().label, source, "");
  if (!labels.contains(c.baseline)) field_error(source, "baseline", "no method labelled '" + c.baseline + "'");

  // Problem-level checks that need the problem itself.
  if (!c.external) {
    try {
      const auto p = find_synthetic(c.problem);
      if (!c.bounds.empty() && c.bounds.size() != p.num_vars()) {
        field_error(source, "grid.bounds",
                    "has " + std::to_string(c.bounds.size()) + " entries, problem has " + std::to_string(p.num_vars()));
      }
    } catch (const std::invalid_argument& e) {
      field_error(source, "problem", e.what());
    }
  }
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment(text.str(), path.string());
}

json ExperimentConfig::canonical() const {
  json j;
  if (external) {
    j["problem"] = {{"command", external->command},
                    {"timeout_ms", external->timeout_ms},
                    {"name", external->name},
                    {"direction", std::string(to_string(external->direction))}};
  } else {
    j["problem"] = problem;
  }
  j["grid"] = {{"M", levels}, {"bounds", bounds_json(bounds)}};
  json ms = json::array();
  for (const auto& m : methods) {
    ms.push_back({{"label", m.label},
                  {"design", m.random_search ? std::string("random") : std::string(to_string(m.design))},
                  {"n_initial", m.n_initial}});
  }
  j["methods"] = std::move(ms);
  j["baseline"] = baseline;
  j["trials"] = trials;
  j["budget"] = budget;
  j["seed"] = base_seed;
  j["rank"] = rank;
  j["train"] = {{"learning_rate", train.learning_rate}, {"beta1", train.beta1},
                {"beta2", train.beta2},                 {"epsilon", train.epsilon},
                {"weight_decay", train.weight_decay},   {"batch_size", train.batch_size},
                {"epochs", train.epochs},               {"seed", train.seed},
                {"decay_bias", train.decay_bias}};
  j["anneal"] = {{"num_sweeps", anneal.num_sweeps},
                 {"num_restarts", anneal.num_restarts},
                 {"beta_initial", anneal.beta_initial},
                 {"beta_final", anneal.beta_final},
                 {"auto_beta_range", anneal.auto_beta_range},
                 {"time_budget_ms", anneal.time_budget_ms ? json(*anneal.time_budget_ms) : json(nullptr)},
                 {"seed", anneal.seed},
                 {"num_threads", anneal.num_threads}};
  // Output location and parallelism do not change results and stay out of the hash.
  return j;
}

std::string ExperimentConfig::hash() const { return hex64(hash_tag(canonical().dump())); }

BlackBoxProblem make_problem(const ExperimentConfig& c) {
  if (c.external) {
    ExternalOptions opts;
    opts.name = c.external->name;
    opts.bounds = c.bounds;
    opts.direction = c.external->direction;
    return external_adapter(c.external->command, c.external->timeout_ms, opts);
  }
  auto p = find_synthetic(c.problem);
  if (!c.bounds.empty()) p.bounds = c.bounds;
  return p;
}

DiscretizationGrid make_grid(const ExperimentConfig& c, const BlackBoxProblem& problem) {
  return DiscretizationGrid(c.bounds.empty() ? problem.bounds : c.bounds, c.levels);
}

ExperimentResult run_experiment(const ExperimentConfig& c, int parallel) {
  ExperimentResult result;
  result.config_hash = c.hash();
  const std::size_t methods = c.methods.size();
  const std::size_t trials = static_cast<std::size_t>(c.trials);
  result.records.assign(methods, std::vector<RunRecord>(trials));
  result.completed.assign(methods, std::vector<bool>(trials, false));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  const std::size_t jobs = methods * trials;

  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t mi = job / trials;
      const int trial = static_cast<int>(job % trials);
      const auto& m = c.methods[mi];
      const std::uint64_t seed = c.trial_seed(trial);
      try {
        const auto problem = make_problem(c);
        const auto grid = make_grid(c, problem);
        RunRecord record;
        if (m.random_search) {
          record = random_search(problem, grid, c.budget, seed, m.n_initial, m.label);
        } else {
          LoopConfig loop;
          loop.budget = c.budget;
          loop.design = {m.design, m.n_initial, seed};
          loop.train = c.train;
          loop.anneal = c.anneal;
          loop.rank = c.rank;
          loop.seed = seed;
          record = run(problem, grid, loop, m.label);
        }
        record.config_hash = result.config_hash;
        result.records[mi][static_cast<std::size_t>(trial)] = std::move(record);
        result.completed[mi][static_cast<std::size_t>(trial)] = true;
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        result.failures.push_back({m.label, trial, seed, e.what()});
      }
    }
  };

  const auto workers = static_cast<std::size_t>(std::clamp<int>(parallel, 1, static_cast<int>(jobs)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  std::sort(result.failures.begin(), result.failures.end(), [&](const RunFailure& a, const RunFailure& b) {
    return std::pair(a.method, a.trial) < std::pair(b.method, b.trial);
  });
  return result;
}

void write_summary_csv(std::ostream& out, const ExperimentConfig& c, const std::vector<Summary>& rows,
                       const std::string& config_hash) {
  out << "# config_hash=" << config_hash << " problem=" << c.problem << " base_seed=" << c.base_seed
      << " trials=" << c.trials << " seeds=";
  for (int t = 0; t < c.trials; ++t) out << (t ? ";" : "") << c.trial_seed(t);
  out << " baseline=" << c.baseline << "\n";
  out << "method,trials,n_initial,budget,initial_best_mean,initial_best_std,final_best_mean,final_best_std,gain,"
         "improvement_vs_baseline\n";
  const Summary* base = nullptr;
  for (const auto& r : rows) {
    if (r.method == c.baseline) base = &r;
  }
  for (const auto& r : rows) {
    out << r.method << ',' << r.trials << ',' << r.n_initial << ',' << r.budget << ',' << format_real(r.initial_mean)
        << ',' << format_real(r.initial_std) << ',' << format_real(r.final_mean) << ',' << format_real(r.final_std)
        << ',' << format_real(r.gain) << ',';
    if (base && &r != base) {
      const double diff = r.final_mean - base->final_mean;
      out << format_real(r.direction == Direction::Maximize ? diff : -diff);
    }
    out << '\n';
  }
}

std::vector<std::filesystem::path> write_artifacts(const ExperimentConfig& c, const ExperimentResult& result,
                                                   const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  fs::create_directories(out_dir / "runs");
  auto open = [&](const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
    return out;
  };

  {
    auto out = open(out_dir / "config.json");
    json j = c.canonical();
    j["config_hash"] = result.config_hash;
    out << j.dump(2) << '\n';
  }

  std::vector<Summary> rows;
  for (std::size_t mi = 0; mi < c.methods.size(); ++mi) {
    const auto& m = c.methods[mi];
    const auto stem = file_stem(m.label);
    std::vector<RunRecord> done;
    for (std::size_t t = 0; t < result.records[mi].size(); ++t) {
      if (!result.completed[mi][t]) continue;
      const auto& r = result.records[mi][t];
      const auto base = out_dir / "runs" / (stem + "_trial" + std::to_string(t));
      open(fs::path(base).concat(".json")) << to_json(r).dump(1) << '\n';
      auto csv = open(fs::path(base).concat(".csv"));
      write_run_csv(csv, r);
      done.push_back(r);
    }
    if (done.size() != result.records[mi].size()) continue;
    const auto s = aggregate(done);
    auto csv = open(out_dir / ("trajectory_" + stem + ".csv"));
    write_trajectory_csv(csv, make_trajectory_table(s, done, result.config_hash));
    rows.push_back(s);
  }

  {
    auto out = open(out_dir / "summary.csv");
    write_summary_csv(out, c, rows, result.config_hash);
  }

  const auto manifest = out_dir / "failures.json";
  if (!result.failures.empty()) {
    json j = json::array();
    for (const auto& f : result.failures) {
      j.push_back({{"method", f.method}, {"trial", f.trial}, {"seed", f.seed}, {"error", f.message}});
    }
    open(manifest) << json{{"config_hash", result.config_hash}, {"failures", j}}.dump(2) << '\n';
  } else {
    std::error_code ignored;
    fs::remove(manifest, ignored);
  }
  return written;
}

}  // namespace fmqa
