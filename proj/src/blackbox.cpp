#include "fmqa/blackbox.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "fmqa/random.hpp"

namespace fmqa {

std::string_view to_string(Direction d) { return d == Direction::Maximize ? "maximize" : "minimize"; }

Direction parse_direction(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "minimize" || lower == "min") return Direction::Minimize;
  if (lower == "maximize" || lower == "max") return Direction::Maximize;
  throw std::invalid_argument("direction must be 'minimize' or 'maximize', got '" + std::string(text) + "'");
}

std::size_t EvalLedger::failures() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const LedgerEntry& e) { return e.failed; }));
}

double evaluate(const BlackBoxProblem& problem, std::span<const double> z, EvalLedger& ledger) {
  if (z.size() != problem.num_vars()) {
    throw std::invalid_argument(problem.name + ": point has " + std::to_string(z.size()) +
                                " coordinates, problem has " + std::to_string(problem.num_vars()));
  }
  LedgerEntry entry;
  entry.point.assign(z.begin(), z.end());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const auto& b = problem.bounds[j];
    const double clipped = std::clamp(entry.point[j], b.lower, b.upper);
    if (clipped != entry.point[j] || std::isnan(entry.point[j])) {
      entry.clipped = true;
      entry.point[j] = std::isnan(entry.point[j]) ? b.lower : clipped;
    }
  }
  if (entry.clipped) entry.message = "point clipped to bounds";

  try {
    const double natural = problem.evaluator(entry.point);
    if (!std::isfinite(natural)) throw EvaluationError("evaluator returned a non-finite value");
    entry.raw = natural;
    entry.internal = problem.to_internal(natural);
  } catch (const std::exception& e) {
    double worst = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& prior : ledger.entries()) {
      lo = std::min(lo, prior.internal);
      hi = std::max(hi, prior.internal);
    }
    if (ledger.count() > 0) worst = hi;
    const double spread = ledger.count() >= 2 && hi > lo ? hi - lo : 1.0;
    entry.failed = true;
    entry.internal = worst + spread;
    entry.raw = problem.to_natural(entry.internal);
    entry.message = e.what();
  }
  const double internal = entry.internal;
  ledger.append(std::move(entry));
  return internal;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double trap_term(double u) { return u <= 0.8 ? 0.8 - u : (u - 0.8) / 0.2; }

// Deterministic orthogonal matrix (Gram-Schmidt on Gaussian rows), row-major.
std::vector<double> rotation(std::size_t n) {
  Rng rng(derive_seed(0x5eed, "ellipsoid-rotation", n));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> R(n * n);
  for (auto& r : R) r = normal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &R[i * n];
    for (std::size_t k = 0; k < i; ++k) {
      const double* prev = &R[k * n];
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += row[c] * prev[c];
      for (std::size_t c = 0; c < n; ++c) row[c] -= dot * prev[c];
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < n; ++c) norm += row[c] * row[c];
    norm = std::sqrt(norm);
    for (std::size_t c = 0; c < n; ++c) row[c] /= norm;
  }
  return R;
}

}  // namespace

BlackBoxProblem make_synthetic(std::string_view family, std::size_t n) {
  if (n < 1) throw std::invalid_argument("synthetic problem needs n_x >= 1");
  BlackBoxProblem p;
  p.name = std::string(family) + "-" + std::to_string(n);
  if (family == "sphere") {
    p.bounds.assign(n, {-5.12, 5.12});
    p.separable_term = [](std::size_t, double z) { return z * z; };
    p.description = "separable sphere, sum z_j^2";
    p.known_optimum = 0.0;
  } else if (family == "rastrigin") {
    // Asymmetric box: a symmetric one makes coarse grids mirror-degenerate.
    p.bounds.assign(n, {-4.3, 5.5});
    p.separable_term = [](std::size_t, double z) { return z * z - 10.0 * std::cos(kTwoPi * z) + 10.0; };
    p.description = "Rastrigin, 10 n + sum (z_j^2 - 10 cos(2 pi z_j))";
    p.known_optimum = 0.0;
  } else if (family == "trap") {
    p.bounds.assign(n, {0.0, 1.0});
    p.direction = Direction::Maximize;
    p.separable_term = [](std::size_t, double z) { return trap_term(z); };
    p.description = "deceptive trap (maximize): slope toward z=0 (0.8 each), global peak at z=1 (1 each)";
    p.known_optimum = static_cast<double>(n);
  } else if (family == "ellipsoid") {
    p.bounds.assign(n, {-5.0, 5.0});
    p.description = "rotated ellipsoid, sum 10^(6 i/(n-1)) y_i^2 with y = R z";
    p.known_optimum = 0.0;
    auto R = std::make_shared<const std::vector<double>>(rotation(n));
    std::vector<double> weights(n, 1.0);
    for (std::size_t i = 0; i < n && n > 1; ++i) {
      weights[i] = std::pow(10.0, 6.0 * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    p.evaluator = [R, weights, n](std::span<const double> z) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double y = 0.0;
        for (std::size_t c = 0; c < n; ++c) y += (*R)[i * n + c] * z[c];
        total += weights[i] * y * y;
      }
      return total;
    };
    return p;
  } else {
    throw std::invalid_argument("unknown synthetic problem family '" + std::string(family) + "'");
  }
  p.evaluator = [term = p.separable_term](std::span<const double> z) {
    double total = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) total += term(j, z[j]);
    return total;
  };
  return p;
}

std::vector<BlackBoxProblem> synthetic_suite() {
  std::vector<BlackBoxProblem> suite;
  for (const char* family : {"sphere", "ellipsoid", "rastrigin", "trap"}) {
    for (std::size_t n : {5, 17, 32}) suite.push_back(make_synthetic(family, n));
  }
  return suite;
}

BlackBoxProblem find_synthetic(std::string_view name) {
  const auto dash = name.rfind('-');
  if (dash == std::string_view::npos) {
    throw std::invalid_argument("synthetic problem name must look like 'family-n', got '" + std::string(name) + "'");
  }
  std::size_t n = 0;
  const auto digits = name.substr(dash + 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || n == 0) {
    throw std::invalid_argument("bad dimension in problem name '" + std::string(name) + "'");
  }
  return make_synthetic(name.substr(0, dash), n);
}

std::pair<double, IndexVector> exhaustive_grid_search(const BlackBoxProblem& problem,
                                                      const DiscretizationGrid& grid, std::size_t cap) {
  if (grid.num_vars() != problem.num_vars()) throw std::invalid_argument("grid does not match problem");
  if (grid.cardinality() > cap) {
    throw CapacityError("grid has more than " + std::to_string(cap) + " points");
  }
  IndexVector q(grid.num_vars(), 0);
  IndexVector best_q = q;
  std::optional<double> best;
  while (true) {
    const auto z = decode_indices(q, grid);
    const double v = problem.evaluator(z);
    if (!best || problem.better(v, *best)) {
      best = v;
      best_q = q;
    }
    std::size_t j = 0;
    while (j < q.size() && ++q[j] == grid.levels()) q[j++] = 0;
    if (j == q.size()) break;
  }
  return {*best, best_q};
}

std::optional<double> grid_optimum(const BlackBoxProblem& problem, const DiscretizationGrid& grid,
                                   std::size_t exhaustive_cap) {
  if (grid.num_vars() != problem.num_vars()) throw std::invalid_argument("grid does not match problem");
  if (problem.separable_term) {
    double total = 0.0;
    for (std::size_t j = 0; j < grid.num_vars(); ++j) {
      std::optional<double> best;
      for (int m = 0; m < grid.levels(); ++m) {
        const double v = problem.separable_term(j, grid.value(j, m));
        if (!best || problem.better(v, *best)) best = v;
      }
      total += *best;
    }
    return total;
  }
  if (grid.cardinality() <= exhaustive_cap) return exhaustive_grid_search(problem, grid, exhaustive_cap).first;
  return std::nullopt;
}

namespace {

struct TempFile {
  std::filesystem::path path;
  ~TempFile() {
    std::error_code ec;
    if (!path.empty()) std::filesystem::remove(path, ec);
  }
};

struct ProcessOutput {
  int status = 0;
  bool timed_out = false;
  std::string out;
  std::string err;
};

ProcessOutput run_shell(const std::string& command, int timeout_ms) {
  int out_pipe[2];
  int err_pipe[2];
  if (pipe(out_pipe) != 0) throw EvaluationError("pipe() failed");
  if (pipe(err_pipe) != 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    throw EvaluationError("pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw EvaluationError("fork() failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(err_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(out_pipe[1]);
  close(err_pipe[1]);

  ProcessOutput result;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  char buffer[4096];
  while (open_fds > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    const int ready = poll(fds, 2, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int k = 0; k < 2; ++k) {
      if (fds[k].fd < 0 || !(fds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t got = read(fds[k].fd, buffer, sizeof buffer);
      if (got <= 0) {
        close(fds[k].fd);
        fds[k].fd = -1;
        --open_fds;
      } else {
        (k == 0 ? result.out : result.err).append(buffer, static_cast<std::size_t>(got));
      }
    }
  }
  if (result.timed_out) kill(-pid, SIGKILL);
  for (auto& f : fds) {
    if (f.fd >= 0) close(f.fd);
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.status = status;
  return result;
}

double parse_single_real(const std::string& out) {
  const auto end = out.find('\n');
  std::string line = out.substr(0, end);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
  std::size_t start = 0;
  while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
  line = line.substr(start);
  if (line.empty()) throw EvaluationError("evaluator printed no value");
  char* stop = nullptr;
  const double v = std::strtod(line.c_str(), &stop);
  if (stop != line.c_str() + line.size()) throw EvaluationError("malformed evaluator output '" + line + "'");
  return v;
}

}  // namespace

BlackBoxProblem external_adapter(std::string command, int timeout_ms, ExternalOptions options) {
  if (command.empty()) throw std::invalid_argument("external command is empty");
  if (timeout_ms < 1) throw std::invalid_argument("external timeout must be positive");
  BlackBoxProblem p;
  p.name = options.name;
  p.bounds = std::move(options.bounds);
  p.direction = options.direction;
  p.description = "external: " + command;
  p.evaluator = [command, timeout_ms](std::span<const double> z) {
    TempFile input;
    {
      auto templ = (std::filesystem::temp_directory_path() / "fmqa-point-XXXXXX").string();
      const int fd = mkstemp(templ.data());
      if (fd < 0) throw EvaluationError("cannot create design point file");
      close(fd);
      input.path = templ;
      std::ofstream file(input.path);
      char text[64];
      for (double v : z) {
        std::snprintf(text, sizeof text, "%.17g\n", v);
        file << text;
      }
      if (!file) throw EvaluationError("cannot write design point file");
    }
    std::string cmd = command;
    const auto slot = cmd.find("{input}");
    if (slot != std::string::npos) {
      cmd.replace(slot, 7, input.path.string());
    } else {
      cmd += " " + input.path.string();
    }
    const auto result = run_shell(cmd, timeout_ms);
    if (result.timed_out) {
      throw EvaluationError("evaluator timed out after " + std::to_string(timeout_ms) + " ms");
    }
    if (!WIFEXITED(result.status) || WEXITSTATUS(result.status) != 0) {
      const int code = WIFEXITED(result.status) ? WEXITSTATUS(result.status) : -1;
      throw EvaluationError("evaluator exited with status " + std::to_string(code) + "; stderr: " + result.err);
    }
    try {
      return parse_single_real(result.out);
    } catch (const EvaluationError& e) {
      throw EvaluationError(std::string(e.what()) + "; stderr: " + result.err);
    }
  };
  return p;
}

}  // namespace fmqa
