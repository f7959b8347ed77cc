#include "fmqa/initdesign.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fmqa/random.hpp"
#include "fmqa/sobol.hpp"

namespace fmqa {

std::string_view to_string(DesignMethod method) {
  switch (method) {
    case DesignMethod::Uniform: return "uniform";
    case DesignMethod::LHS: return "lhs";
    case DesignMethod::Sobol: return "sobol";
  }
  return "unknown";
}

DesignMethod parse_design_method(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "uniform" || lower == "random") return DesignMethod::Uniform;
  if (lower == "lhs") return DesignMethod::LHS;
  if (lower == "sobol") return DesignMethod::Sobol;
  throw std::invalid_argument("unknown design method '" + std::string(text) + "'");
}

namespace {

void check_samples(const DesignSpec& spec) {
  if (spec.n_samples < 1) throw std::invalid_argument("design needs n_samples >= 1");
}

}  // namespace

int unit_to_level(double s, int levels) {
  const auto level = static_cast<long long>(std::floor(static_cast<double>(levels) * s));
  return static_cast<int>(std::clamp<long long>(level, 0, levels - 1));
}

ActivationBuckets bucket_counts(const std::vector<int>& counts) {
  ActivationBuckets b{};
  for (int c : counts) {
    if (c == 0) ++b[0];
    else if (c == 1) ++b[1];
    else if (c < 10) ++b[2];
    else ++b[3];
  }
  return b;
}

std::vector<IndexVector> uniform_design(const DiscretizationGrid& grid, const DesignSpec& spec) {
  check_samples(spec);
  Rng rng(derive_seed(spec.seed, "design-uniform"));
  std::uniform_int_distribution<int> level(0, grid.levels() - 1);
  std::vector<IndexVector> out(static_cast<std::size_t>(spec.n_samples), IndexVector(grid.num_vars()));
  for (auto& q : out) {
    for (auto& m : q) m = level(rng);
  }
  return out;
}

std::vector<IndexVector> lhs_design(const DiscretizationGrid& grid, const DesignSpec& spec) {
  check_samples(spec);
  Rng rng(derive_seed(spec.seed, "design-lhs"));
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const auto n = static_cast<std::size_t>(spec.n_samples);
  std::vector<IndexVector> out(n, IndexVector(grid.num_vars()));
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < grid.num_vars(); ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t t = 0; t < n; ++t) {
      const double s = (static_cast<double>(perm[t]) + jitter(rng)) / static_cast<double>(n);
      out[t][j] = unit_to_level(s, grid.levels());
    }
  }
  return out;
}

std::vector<IndexVector> sobol_design(const DiscretizationGrid& grid, const DesignSpec& spec) {
  check_samples(spec);
  const std::size_t dims = grid.num_vars();
  const SobolSequence sequence(dims);
  const auto n = static_cast<std::size_t>(spec.n_samples);
  const auto raw = sequence.points(n);
  std::vector<std::uint64_t> keys(dims);
  for (std::size_t j = 0; j < dims; ++j) keys[j] = derive_seed(spec.seed, "design-sobol", j);
  std::vector<IndexVector> out(n, IndexVector(dims));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < dims; ++j) {
      out[t][j] = unit_to_level(to_unit(owen_scramble(raw[t * dims + j], keys[j])), grid.levels());
    }
  }
  return out;
}

std::vector<IndexVector> make_design(const DiscretizationGrid& grid, const DesignSpec& spec) {
  switch (spec.method) {
    case DesignMethod::Uniform: return uniform_design(grid, spec);
    case DesignMethod::LHS: return lhs_design(grid, spec);
    case DesignMethod::Sobol: return sobol_design(grid, spec);
  }
  throw std::invalid_argument("unknown design method");
}

std::vector<std::string> design_warnings(const DiscretizationGrid& grid, const DesignSpec& spec) {
  std::vector<std::string> warnings;
  const int M = grid.levels();
  if (spec.n_samples < M) {
    warnings.push_back("N0 = " + std::to_string(spec.n_samples) + " < M = " + std::to_string(M) +
                       ": complete marginal bit coverage is unattainable");
  }
  if (spec.method == DesignMethod::Sobol) {
    if (!std::has_single_bit(static_cast<unsigned>(M))) {
      warnings.push_back("Sobol' coverage guarantee needs M to be a power of two (M = " +
                         std::to_string(M) + ")");
    } else if (spec.n_samples != M) {
      warnings.push_back("Sobol' coverage guarantee needs N0 = M");
    }
  }
  if (spec.method == DesignMethod::LHS && spec.n_samples > M && spec.n_samples % M != 0) {
    warnings.push_back("LHS strata do not align with the M grid levels (N0 not a multiple of M)");
  }
  return warnings;
}

std::uint64_t pair_capacity(std::size_t num_vars, int levels) {
  const auto n = static_cast<std::uint64_t>(num_vars);
  const auto m = static_cast<std::uint64_t>(levels);
  return n * (n - (n > 0 ? 1 : 0)) / 2 * m * m;
}

CoverageReport coverage_counts(const std::vector<OneHotVector>& points, const DiscretizationGrid& grid) {
  CoverageReport r;
  r.num_vars = grid.num_vars();
  r.levels = grid.levels();
  r.num_points = points.size();
  const std::size_t N = grid.num_bits();
  r.counts.assign(N, 0);
  std::vector<bool> pair_seen(N * N, false);
  for (const auto& x : points) {
    if (x.size() != N) throw std::invalid_argument("coverage_counts: point length does not match grid");
    const auto& active = x.active();
    for (std::size_t a = 0; a < active.size(); ++a) {
      ++r.counts[active[a]];
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const auto lo = std::min(active[a], active[b]);
        const auto hi = std::max(active[a], active[b]);
        if (!pair_seen[lo * N + hi]) {
          pair_seen[lo * N + hi] = true;
          ++r.pairs_covered;
        }
      }
    }
  }
  r.never_active = static_cast<std::size_t>(std::count(r.counts.begin(), r.counts.end(), 0));
  r.fraction_never_active = static_cast<double>(r.never_active) / static_cast<double>(N);
  r.pair_capacity = pair_capacity(r.num_vars, r.levels);
  return r;
}

UncoveredEstimate expected_uncovered(int levels, int n_samples, std::size_t num_vars) {
  if (levels < 2) throw std::invalid_argument("expected_uncovered needs M >= 2");
  if (n_samples < 0) throw std::invalid_argument("expected_uncovered needs N0 >= 0");
  UncoveredEstimate e;
  e.probability = std::pow(1.0 - 1.0 / static_cast<double>(levels), n_samples);
  e.expected_count = static_cast<double>(num_vars) * levels * e.probability;
  return e;
}

}  // namespace fmqa
