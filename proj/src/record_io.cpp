#include "fmqa/record_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fmqa {

using nlohmann::json;

std::string format_real(double v) {
  char text[32];
  std::snprintf(text, sizeof text, "%.17g", v);
  return text;
}

json to_json(const RunRecord& r) {
  json j;
  j["problem"] = r.problem;
  j["method"] = r.method;
  j["direction"] = std::string(to_string(r.direction));
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["n_x"] = r.num_vars;
  j["M"] = r.levels;
  j["budget"] = r.budget;
  j["n_initial"] = r.n_initial;
  j["raw_values"] = r.raw_values;
  j["best_trajectory"] = r.best_trajectory;
  j["evaluated"] = r.evaluated;
  j["targets"] = r.final_dataset.targets;
  json snaps = json::array();
  for (const auto& s : r.snapshots) snaps.push_back({{"evaluations", s.evaluations}, {"counts", s.counts}});
  j["activation_snapshots"] = std::move(snaps);
  j["lambda_pen"] = r.lambda_pen;
  j["sampler_feasible"] = r.sampler_feasible;
  j["dedupe_steps"] = r.dedupe_steps;
  j["failures"] = r.failures;
  j["warnings"] = r.warnings;
  j["timing_ms"] = {{"design", r.timing.design_ms},
                    {"train", r.timing.train_ms},
                    {"sample", r.timing.sample_ms},
                    {"evaluate", r.timing.evaluate_ms}};
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.problem = j.at("problem").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.direction = parse_direction(j.at("direction").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.value("config_hash", std::string{});
  r.num_vars = j.at("n_x").get<std::size_t>();
  r.levels = j.at("M").get<int>();
  r.budget = j.at("budget").get<int>();
  r.n_initial = j.at("n_initial").get<int>();
  r.raw_values = j.at("raw_values").get<std::vector<double>>();
  r.best_trajectory = j.at("best_trajectory").get<std::vector<double>>();
  r.evaluated = j.value("evaluated", std::vector<IndexVector>{});
  if (j.contains("activation_snapshots")) {
    for (const auto& s : j.at("activation_snapshots")) {
      r.snapshots.push_back({s.at("evaluations").get<std::size_t>(), s.at("counts").get<std::vector<int>>()});
    }
  }
  r.lambda_pen = j.value("lambda_pen", std::vector<double>{});
  r.failures = j.value("failures", std::size_t{0});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

RunRecord load_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run record " + path.string());
  try {
    return record_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_run_csv(std::ostream& out, const RunRecord& r) {
  out << "# problem=" << r.problem << " method=" << r.method << " seed=" << r.seed
      << " config_hash=" << r.config_hash << " n_initial=" << r.n_initial << "\n";
  out << "evaluation,raw_value,best_so_far\n";
  for (std::size_t e = 0; e < r.raw_values.size(); ++e) {
    out << (e + 1) << ',' << format_real(r.raw_values[e]) << ',' << format_real(r.best_trajectory[e]) << '\n';
  }
}

TrajectoryTable make_trajectory_table(const Summary& s, const std::vector<RunRecord>& records,
                                      const std::string& config_hash) {
  TrajectoryTable t;
  t.method = s.method;
  t.n_initial = s.n_initial;
  t.budget = s.budget;
  t.config_hash = config_hash;
  t.mean = s.mean;
  t.stddev = s.stddev;
  for (const auto& r : records) t.trials.push_back(r.best_trajectory);
  return t;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryTable& t) {
  out << "# method=" << t.method << " n_initial=" << t.n_initial << " budget=" << t.budget
      << " config_hash=" << t.config_hash << "\n";
  out << "evaluation,mean,std";
  for (std::size_t k = 0; k < t.trials.size(); ++k) out << ",trial_" << k;
  out << '\n';
  for (std::size_t e = 0; e < t.mean.size(); ++e) {
    out << (e + 1) << ',' << format_real(t.mean[e]) << ',' << format_real(t.stddev[e]);
    for (const auto& trial : t.trials) out << ',' << format_real(trial[e]);
    out << '\n';
  }
}

namespace {

[[noreturn]] void csv_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("trajectory CSV line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(text);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

TrajectoryTable read_trajectory_csv(std::istream& in) {
  TrajectoryTable t;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  std::size_t columns = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    if (text[0] == '#') {
      std::istringstream meta(text.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        if (key == "method") t.method = value;
        else if (key == "n_initial") t.n_initial = std::stoi(value);
        else if (key == "budget") t.budget = std::stoi(value);
        else if (key == "config_hash") t.config_hash = value;
      }
      continue;
    }
    const auto fields = split(text, ',');
    if (!have_header) {
      if (fields.size() < 3 || fields[0] != "evaluation" || fields[1] != "mean") {
        csv_error(line, "expected header 'evaluation,mean,std,...'");
      }
      columns = fields.size();
      t.trials.resize(columns - 3);
      have_header = true;
      continue;
    }
    if (fields.size() != columns) csv_error(line, "expected " + std::to_string(columns) + " fields");
    try {
      const auto expected = t.mean.size() + 1;
      if (std::stoul(fields[0]) != expected) csv_error(line, "evaluation index out of sequence");
      t.mean.push_back(std::stod(fields[1]));
      t.stddev.push_back(std::stod(fields[2]));
      for (std::size_t k = 3; k < columns; ++k) t.trials[k - 3].push_back(std::stod(fields[k]));
    } catch (const std::logic_error&) {
      csv_error(line, "non-numeric field");
    }
  }
  if (!have_header) csv_error(line, "missing header");
  if (t.budget == 0) t.budget = static_cast<int>(t.mean.size());
  if (static_cast<std::size_t>(t.budget) != t.mean.size()) {
    csv_error(line, "budget " + std::to_string(t.budget) + " but " + std::to_string(t.mean.size()) + " rows");
  }
  return t;
}

}  // namespace fmqa
