#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fmqa/annealer.hpp"
#include "fmqa/experiment.hpp"
#include "fmqa/qubo.hpp"
#include "fmqa/record_io.hpp"
#include "fmqa/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

/// Invalid user input other than the experiment config itself.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  std::cout << "wrote " << path.string() << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out, int parallel, const std::int64_t* seed) {
  auto config = fmqa::load_experiment(config_path);
  if (seed) config.base_seed = static_cast<std::uint64_t>(*seed);
  const fs::path out_dir = out.empty() ? fs::path(config.output_dir) : fs::path(out);
  std::cout << "config " << config.hash() << ": " << config.methods.size() << " methods x " << config.trials
            << " trials on " << config.problem << '\n';
  const auto result = fmqa::run_experiment(config, parallel);
  const auto written = fmqa::write_artifacts(config, result, out_dir);
  std::cout << "wrote " << written.size() << " files to " << out_dir.string() << '\n';
  for (const auto& f : result.failures) {
    std::cerr << "run failed: " << f.method << " trial " << f.trial << " (seed " << f.seed << "): " << f.message
              << '\n';
  }
  return result.failures.empty() ? kExitOk : kExitRuntime;
}

std::vector<fs::path> expand_records(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      const fs::path runs = fs::is_directory(p / "runs") ? p / "runs" : p;
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(runs)) {
        if (e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

int cmd_coverage(const std::vector<std::string>& inputs, const fs::path& out_dir, const std::string& format) {
  std::map<std::string, std::vector<fmqa::RunRecord>> by_method;
  std::size_t skipped = 0;
  for (const auto& path : expand_records(inputs)) {
    try {
      auto r = fmqa::load_record(path);
      if (r.snapshots.empty()) {
        std::cerr << path.string() << ": no activation snapshots, skipped\n";
        ++skipped;
        continue;
      }
      by_method[r.method].push_back(std::move(r));
    } catch (const std::exception& e) {
      std::cerr << e.what() << ", skipped\n";
      ++skipped;
    }
  }
  if (by_method.empty()) {
    std::cerr << "no usable run records\n";
    return kExitRuntime;
  }
  for (const auto& [method, records] : by_method) {
    try {
      const auto series = fmqa::coverage_series(records);
      const auto stem = out_dir / ("coverage_" + fmqa::file_stem(method));
      std::ostringstream csv;
      fmqa::write_coverage_csv(csv, series);
      write_file(fs::path(stem).concat(".csv"), csv.str());
      if (format == "svg") write_file(fs::path(stem).concat(".svg"), fmqa::coverage_svg(series));
    } catch (const std::invalid_argument& e) {
      std::cerr << method << ": " << e.what() << '\n';
      ++skipped;
    }
  }
  return skipped == 0 ? kExitOk : kExitRuntime;
}

int cmd_plot(const std::vector<std::string>& inputs, const fs::path& out_dir, const std::string& format,
             const std::string& title) {
  std::vector<fmqa::TrajectoryTable> tables;
  for (const auto& in : inputs) {
    std::ifstream stream(in);
    if (!stream) throw InputError("cannot open " + in);
    try {
      tables.push_back(fmqa::read_trajectory_csv(stream));
    } catch (const std::runtime_error& e) {
      throw InputError(in + ": " + e.what());
    }
    if (tables.back().method.empty()) tables.back().method = fs::path(in).stem().string();
  }
  for (const auto& t : tables) {
    if (t.mean.size() != tables.front().mean.size()) {
      throw InputError("trajectory lengths differ: " + tables.front().method + " has " +
                       std::to_string(tables.front().mean.size()) + ", " + t.method + " has " +
                       std::to_string(t.mean.size()));
    }
  }
  if (format == "csv") {
    std::ostringstream csv;
    csv << "# n_initial=" << tables.front().n_initial << "\nevaluation";
    for (const auto& t : tables) csv << ',' << t.method;
    csv << '\n';
    for (std::size_t e = 0; e < tables.front().mean.size(); ++e) {
      csv << (e + 1);
      for (const auto& t : tables) csv << ',' << fmqa::format_real(t.mean[e]);
      csv << '\n';
    }
    write_file(out_dir / "trajectories.csv", csv.str());
  } else {
    write_file(out_dir / "trajectories.svg", fmqa::trajectory_svg(tables, title));
  }
  return kExitOk;
}

struct SolveOptions {
  std::string path;
  int sweeps = fmqa::AnnealConfig{}.num_sweeps;
  int restarts = fmqa::AnnealConfig{}.num_restarts;
  double beta_initial = fmqa::AnnealConfig{}.beta_initial;
  double beta_final = fmqa::AnnealConfig{}.beta_final;
  bool auto_beta = false;
  std::uint64_t seed = 0;
  int threads = 1;
  int index_base = 0;
  bool brute_force = false;
};

int cmd_solve(const SolveOptions& o) {
  std::ifstream in(o.path);
  if (!in) throw InputError("cannot open " + o.path);
  fmqa::QuboMatrix Q(0);
  try {
    Q = fmqa::read_coordinate(in, o.index_base);
  } catch (const std::runtime_error& e) {
    throw InputError(o.path + ": " + e.what());
  }
  fmqa::SampleResult r;
  if (o.brute_force) {
    r = fmqa::brute_force_min(Q);
  } else {
    fmqa::AnnealConfig cfg;
    cfg.num_sweeps = o.sweeps;
    cfg.num_restarts = o.restarts;
    cfg.beta_initial = o.beta_initial;
    cfg.beta_final = o.beta_final;
    cfg.auto_beta_range = o.auto_beta;
    cfg.seed = o.seed;
    cfg.num_threads = o.threads;
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
    r = fmqa::sample(Q, cfg);
  }
  std::string bits;
  for (auto b : r.best_bits) bits.push_back(b ? '1' : '0');
  std::cout << "energy " << fmqa::format_real(r.best_energy) << '\n';
  if (Q.offset() != 0.0) {
    std::cout << "energy_with_offset " << fmqa::format_real(r.best_energy + Q.offset()) << '\n';
  }
  std::cout << "state " << bits << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FMQA black-box optimization with coverage-guaranteed initial designs"};
  app.require_subcommand(1);

  std::string config_path, out;
  int parallel = 1;
  std::int64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run every method for every trial of an experiment config");
  run->add_option("--config", config_path, "Experiment config (JSON, comments allowed)")->required();
  run->add_option("--out", out, "Output directory (default: the config's \"output\")");
  run->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "Override the base seed");

  std::vector<std::string> inputs;
  std::string report_out = ".", format = "svg", title;
  auto* coverage = app.add_subcommand("coverage-report", "Bit-activation buckets per method from run records");
  coverage->add_option("records", inputs, "Run record JSON files or run directories")->required();
  coverage->add_option("--out", report_out, "Output directory");
  coverage->add_option("--format", format, "svg (CSV plus plot) or csv")->check(CLI::IsMember({"svg", "csv"}));

  auto* plot = app.add_subcommand("plot", "Mean best-so-far curves from trajectory CSVs");
  plot->add_option("trajectories", inputs, "trajectory_<method>.csv files")->required();
  plot->add_option("--out", report_out, "Output directory");
  plot->add_option("--format", format, "svg or csv")->check(CLI::IsMember({"svg", "csv"}));
  plot->add_option("--title", title, "Plot title");

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve-qubo", "Minimize a QUBO given in coordinate format");
  solve_cmd->add_option("matrix", solve.path, "Coordinate file: 'i j value' per line")->required();
  solve_cmd->add_option("--sweeps", solve.sweeps, "Sweeps per restart")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--restarts", solve.restarts, "Independent chains")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--beta-initial", solve.beta_initial, "Hot inverse temperature");
  solve_cmd->add_option("--beta-final", solve.beta_final, "Cold inverse temperature");
  solve_cmd->add_flag("--auto-beta", solve.auto_beta, "Derive the beta range from the matrix");
  solve_cmd->add_option("--seed", solve.seed, "Sampler seed");
  solve_cmd->add_option("--threads", solve.threads, "Worker threads")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--index-base", solve.index_base, "Index of the first variable in the file")
      ->check(CLI::IsMember({0, 1}));
  solve_cmd->add_flag("--brute-force", solve.brute_force, "Exhaustive search (N <= 24)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, out, parallel, seed_opt->count() ? &seed : nullptr);
    if (*coverage) return cmd_coverage(inputs, report_out, format);
    if (*plot) return cmd_plot(inputs, report_out, format, title);
    if (*solve_cmd) return cmd_solve(solve);
  } catch (const fmqa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
