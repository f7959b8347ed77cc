#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmqa/optimizer.hpp"

namespace fmqa {

/// Shortest round-tripping decimal form ("%.17g").
std::string format_real(double v);

nlohmann::json to_json(const RunRecord& record);
/// Inverse of to_json for the fields reports need. Missing snapshot arrays are
/// allowed and leave `snapshots` empty.
RunRecord record_from_json(const nlohmann::json& j);
RunRecord load_record(const std::filesystem::path& path);

/// One row per evaluation: index (1-based), raw natural value, best-so-far.
void write_run_csv(std::ostream& out, const RunRecord& record);

/// Mean best-so-far curve of one method.
struct TrajectoryTable {
  std::string method;
  int n_initial = 0;
  int budget = 0;
  std::string config_hash;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::vector<double>> trials;
};

TrajectoryTable make_trajectory_table(const Summary& summary, const std::vector<RunRecord>& records,
                                      const std::string& config_hash);
void write_trajectory_csv(std::ostream& out, const TrajectoryTable& table);
/// Throws std::runtime_error with a line number on malformed input.
TrajectoryTable read_trajectory_csv(std::istream& in);

}  // namespace fmqa
