#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmqa/blackbox.hpp"
#include "fmqa/encoding.hpp"
#include "fmqa/optimizer.hpp"

namespace fmqa {

/// Invalid experiment configuration. The message names the line or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MethodSpec {
  std::string label;
  /// Grid-uniform random search instead of FMQA ("design": "random").
  bool random_search = false;
  DesignMethod design = DesignMethod::Uniform;
  int n_initial = 0;
};

struct ExternalProblemSpec {
  std::string command;
  int timeout_ms = 60000;
  std::string name = "external";
  Direction direction = Direction::Minimize;
};

struct ExperimentConfig {
  /// Synthetic problem name ("trap-5") or an external command.
  std::string problem;
  std::optional<ExternalProblemSpec> external;
  int levels = 8;
  /// Empty: the problem's own box.
  std::vector<Bounds> bounds;
  std::vector<MethodSpec> methods;
  std::string baseline;
  int trials = 10;
  int budget = 200;
  std::uint64_t base_seed = 0;
  int rank = 5;
  TrainConfig train;
  AnnealConfig anneal = loop_anneal_defaults();
  std::string output_dir = "results";

  /// Canonical form with defaults filled in; its hash identifies the experiment.
  nlohmann::json canonical() const;
  std::string hash() const;
  std::uint64_t trial_seed(int trial) const { return base_seed + static_cast<std::uint64_t>(trial); }
};

/// Parses a JSON config (comments allowed). `source` prefixes diagnostics.
ExperimentConfig parse_experiment(const std::string& text, const std::string& source = "config");
ExperimentConfig load_experiment(const std::filesystem::path& path);

BlackBoxProblem make_problem(const ExperimentConfig& config);
DiscretizationGrid make_grid(const ExperimentConfig& config, const BlackBoxProblem& problem);

struct RunFailure {
  std::string method;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct ExperimentResult {
  std::string config_hash;
  /// Indexed [method][trial]; failed runs leave a gap (see `completed`).
  std::vector<std::vector<RunRecord>> records;
  std::vector<std::vector<bool>> completed;
  std::vector<RunFailure> failures;
};

/// Runs trials x methods on a pool of `parallel` workers. Run failures are
/// collected, not thrown.
ExperimentResult run_experiment(const ExperimentConfig& config, int parallel = 1);

/// Writes config.json, runs/<label>_trial<k>.{json,csv}, summary.csv,
/// trajectory_<label>.csv and, on failures, failures.json. Methods with a
/// failed trial are left out of the summary. Returns the written paths.
std::vector<std::filesystem::path> write_artifacts(const ExperimentConfig& config, const ExperimentResult& result,
                                                   const std::filesystem::path& out_dir);

/// Summary rows, one per method; improvement over the baseline is positive when
/// better in the problem's direction and blank for the baseline row.
void write_summary_csv(std::ostream& out, const ExperimentConfig& config, const std::vector<Summary>& rows,
                       const std::string& config_hash);

/// File-name-safe form of a method label.
std::string file_stem(const std::string& label);

}  // namespace fmqa
