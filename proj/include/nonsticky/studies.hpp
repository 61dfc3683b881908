#pragma once

// Monte Carlo experiments on the Euler scheme: weak convergence against the
// exact squared-Bessel law, strong Cauchy convergence on coupled grids,
// occupation scaling near a zero of sigma, and the frozen-start control.
//
// Every study computes one independent work unit per path index, stores the
// per-path results in index order and reduces them sequentially, so reports
// do not depend on the number of workers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nonsticky/coefficients.hpp"
#include "nonsticky/em_engine.hpp"
#include "nonsticky/error.hpp"
#include "nonsticky/estimators.hpp"
#include "nonsticky/ks.hpp"
#include "nonsticky/oracles.hpp"
#include "nonsticky/parallel.hpp"
#include "nonsticky/version.hpp"

namespace nonsticky {

enum class StudyKind { WeakKS, StrongCauchy, AbsStrongCauchy, OccupationScaling, TrapControl };

inline const char* to_string(StudyKind k) {
  switch (k) {
    case StudyKind::WeakKS: return "weak_ks";
    case StudyKind::StrongCauchy: return "strong_cauchy";
    case StudyKind::AbsStrongCauchy: return "abs_strong_cauchy";
    case StudyKind::OccupationScaling: return "occupation_scaling";
    case StudyKind::TrapControl: return "trap_control";
  }
  return "?";
}

inline constexpr std::size_t kRecommendedMinPaths = 100;

struct StudyConfig {
  explicit StudyConfig(SdeProblem p) : problem(std::move(p)) {}

  SdeProblem problem;
  StudyKind kind = StudyKind::WeakKS;
  std::vector<int> levels;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;

  // strong studies
  double p = 1.0;
  std::optional<int> finest_level;  ///< defaults to max(levels) + 2

  // occupation scaling
  double z = 0.0;
  std::vector<double> eps;
  OccupationKind estimator = OccupationKind::Tent;
  std::optional<double> expected_slope;  ///< defaults to 1 - 2 alpha
  double slope_tolerance = 0.15;
  double dominance_factor = 10.0;
  double saturation_fraction = 0.9;

  // weak study
  double ks_p_threshold = 0.01;
  double ks_slack = 0.10;

  void validate() const {
    problem.validate();
    if (levels.empty()) throw ConfigError("study needs at least one level");
    for (int l : levels) check_level(l);
    for (std::size_t i = 1; i < levels.size(); ++i)
      if (levels[i] <= levels[i - 1]) throw ConfigError("levels must be strictly ascending");
    if (n_paths < 1) throw ConfigError("n_paths must be positive");
    if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
    for (double e : eps)
      if (!(e > 0.0)) throw ConfigError("eps values must be positive");
  }
  int finest() const { return finest_level.value_or(levels.back() + 2); }
};

struct ReportRow {
  int level = 0;
  double eps = std::numeric_limits<double>::quiet_NaN();
  std::string arm;  ///< trap control only
  double statistic = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_paths = 0;
  bool in_fit = false;  ///< occupation only
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ConvergenceReport {
  StudyKind kind = StudyKind::WeakKS;
  std::vector<ReportRow> rows;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> notes;
  bool verdict = false;
  bool ci_reliable = true;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string code_version = kVersion;
  double wall_seconds = 0.0;  ///< excluded from summaries

  void add_check(std::string name, bool passed, std::string detail = {}) {
    checks.push_back({std::move(name), passed, std::move(detail)});
  }
  void finalize_verdict() {
    verdict = !checks.empty() &&
              std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  std::optional<double> metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
      if (k == name) return v;
    return std::nullopt;
  }
};

namespace detail {

inline ConvergenceReport start_report(const StudyConfig& cfg) {
  ConvergenceReport r;
  r.kind = cfg.kind;
  r.seed = cfg.seed;
  r.ci_reliable = cfg.n_paths >= kMinPathsForCi;
  if (!r.ci_reliable)
    r.notes.push_back("n_paths below " + std::to_string(kMinPathsForCi) +
                      ": confidence intervals unreliable");
  if (cfg.n_paths < kRecommendedMinPaths)
    r.notes.push_back("n_paths below the recommended minimum of " +
                      std::to_string(kRecommendedMinPaths));
  return r;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline double require_cev_alpha(const SdeProblem& problem) {
  const auto alpha = problem.coefficient.alpha();
  if (!alpha || !(*alpha > 0.0 && *alpha < 0.5))
    throw ConfigError("study needs a power-law coefficient with alpha in (0, 1/2)");
  return *alpha;
}

// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace detail

/// Weak convergence of the terminal law: KS distance between g(X_T) of the
/// scheme at each level and exact BESQ samples of g(X_T).
inline ConvergenceReport run_weak_ks(const StudyConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  const double alpha = detail::require_cev_alpha(cfg.problem);
  detail::Stopwatch clock;
  ConvergenceReport report = detail::start_report(cfg);
  const std::size_t n = cfg.n_paths;
  const std::size_t nl = cfg.levels.size();

  std::vector<std::vector<double>> scheme(nl, std::vector<double>(n));
  std::vector<double> exact(n);
  const BesqParams besq{besq_dimension(alpha), g_transform(cfg.problem.x0, alpha),
                        cfg.problem.horizon};

  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto family = simulate_coupled_family(cfg.problem, cfg.seed, i, cfg.levels);
      for (std::size_t l = 0; l < nl; ++l)
        scheme[l][i] = g_transform(family[l].terminal(), alpha);
      exact[i] = besq_exact_sample(besq, RngKey{cfg.seed, i, StreamDomain::OracleSamples});
    }
  });

  std::vector<double> distances;
  for (std::size_t l = 0; l < nl; ++l) {
    const KsResult ks = two_sample_ks(scheme[l], exact);
    // 95% asymptotic critical value as a noise band around D
    const double band = 1.3580986393225505 / std::sqrt(ks.effective_n);
    ReportRow row;
    row.level = cfg.levels[l];
    row.statistic = ks.statistic;
    row.ci_low = std::max(0.0, ks.statistic - band);
    row.ci_high = ks.statistic + band;
    row.p_value = ks.p_value;
    row.n_paths = n;
    report.rows.push_back(row);
    distances.push_back(ks.statistic);
  }

  if (nl > 1) {
    bool monotone = true;
    std::string detail;
    for (std::size_t l = 1; l < nl; ++l) {
      if (distances[l] > distances[l - 1] * (1.0 + cfg.ks_slack)) {
        monotone = false;
        detail += "D rises at level " + std::to_string(cfg.levels[l]) + "; ";
      }
    }
    report.add_check("ks_nonincreasing", monotone,
                     monotone ? "D nonincreasing within slack " + detail::fmt(cfg.ks_slack)
                              : detail);
  } else {
    report.notes.push_back("single level: monotonicity check skipped");
  }
  const double final_p = report.rows.back().p_value;
  report.add_check("final_p_above_threshold", final_p > cfg.ks_p_threshold,
                   "p = " + detail::fmt(final_p) + " vs " + detail::fmt(cfg.ks_p_threshold));
  report.metrics.emplace_back("final_ks_distance", distances.back());
  report.metrics.emplace_back("final_p_value", final_p);
  report.finalize_verdict();
  report.wall_seconds = clock.seconds();
  return report;
}

namespace detail {

template <class Distance>
ConvergenceReport run_cauchy(const StudyConfig& cfg, unsigned workers, Distance distance) {
  cfg.validate();
  if (cfg.levels.size() < 3) throw ConfigError("strong study needs at least three levels");
  const int finest = cfg.finest();
  if (finest < cfg.levels.back())
    throw ConfigError("finest_level must be at least the largest ladder level");
  Stopwatch clock;
  ConvergenceReport report = start_report(cfg);
  const std::size_t n = cfg.n_paths;
  const std::size_t nl = cfg.levels.size();

  std::vector<int> family_levels = cfg.levels;
  if (family_levels.back() != finest) family_levels.push_back(finest);

  std::vector<std::vector<double>> errors(nl, std::vector<double>(n));
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto family = simulate_coupled_family(cfg.problem, cfg.seed, i, family_levels);
      const GridPath& proxy = family.back();
      for (std::size_t l = 0; l < nl; ++l) errors[l][i] = distance(family[l], proxy);
    }
  });

  std::vector<PNormEstimate> est;
  for (std::size_t l = 0; l < nl; ++l) {
    est.push_back(p_norm_aggregate(errors[l], cfg.p));
    ReportRow row;
    row.level = cfg.levels[l];
    row.statistic = est.back().value;
    row.ci_low = est.back().ci_low();
    row.ci_high = est.back().ci_high();
    row.n_paths = n;
    report.rows.push_back(row);
  }

  bool decreasing = true;
  for (std::size_t l = 1; l < nl; ++l)
    if (!(est[l].value < est[l - 1].value)) decreasing = false;
  report.add_check("strictly_decreasing", decreasing);

  bool separated = report.ci_reliable;
  std::string detail = report.ci_reliable ? "" : "CI unreliable with fewer than 30 paths";
  for (std::size_t l = nl - 2; l < nl; ++l) {
    if (!(est[l - 1].ci_low() > est[l].ci_high())) {
      separated = false;
      detail += "CI overlap between levels " + std::to_string(cfg.levels[l - 1]) + " and " +
                std::to_string(cfg.levels[l]) + "; ";
    }
  }
  report.add_check("ci_separated_last_two_steps", separated, detail);
  report.metrics.emplace_back("p", cfg.p);
  report.metrics.emplace_back("finest_level", finest);
  report.finalize_verdict();
  report.wall_seconds = clock.seconds();
  return report;
}

}  // namespace detail

/// E[sup_k |X^(L) - X^(finest)|^p]^(1/p) on coupled grids for each ladder level.
inline ConvergenceReport run_strong_cauchy(const StudyConfig& cfg, unsigned workers = 1) {
  return detail::run_cauchy(cfg, workers, [](const GridPath& a, const GridPath& b) {
    return sup_difference(a, b);
  });
}

/// As run_strong_cauchy, comparing |X| instead of X.
inline ConvergenceReport run_abs_strong_cauchy(const StudyConfig& cfg, unsigned workers = 1) {
  return detail::run_cauchy(cfg, workers, [](const GridPath& a, const GridPath& b) {
    return abs_sup_difference(a, b);
  });
}

/// eps values passing the dominance filter at `level`: the integral term of
/// the occupation bound must be at least `factor` times the Lipschitz term
/// (2/eps) / sqrt(n).
inline std::vector<bool> dominance_filter(const CoefficientSpec& sigma, double z,
                                          std::span<const double> eps, int level,
                                          double factor) {
  const double root_n = std::sqrt(static_cast<double>(steps_at_level(level)));
  std::vector<bool> keep;
  for (double e : eps) {
    const double integral_term = inverse_square_integral(sigma, z, e);
    const double lipschitz_term = (2.0 / e) / root_n;
    keep.push_back(integral_term >= factor * lipschitz_term);
  }
  return keep;
}

/// Mean occupation near z per eps at a fine level (and a coarser comparison
/// level on the same Brownian paths), with the log-log slope over eps.
inline ConvergenceReport run_occupation_scaling(const StudyConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  const auto& sigma = cfg.problem.coefficient;
  if (cfg.eps.empty()) throw ConfigError("occupation study needs an eps ladder");
  double target = 0.0;
  if (cfg.expected_slope) {
    target = *cfg.expected_slope;
  } else if (sigma.is_power_law()) {
    target = 1.0 - 2.0 * *sigma.alpha();
  } else {
    throw ConfigError("occupation study needs expected_slope for non power-law coefficients");
  }
  if (sigma.is_power_law() && !sigma.in_zero_set(cfg.z))
    throw ConfigError("occupation level z must lie in the zero set");

  const int fine = cfg.levels.back();
  const int coarse = cfg.levels.size() >= 2 ? cfg.levels.front() : std::max(0, fine - 4);
  if (fine > kMaxDenseLevel) throw ConfigError("occupation study is limited to dense levels");
  const auto keep = dominance_filter(sigma, cfg.z, cfg.eps, fine, cfg.dominance_factor);
  if (std::count(keep.begin(), keep.end(), true) < 2)
    throw ConfigError("fewer than two eps pass the dominance filter at level " +
                      std::to_string(fine) + "; raise the level");

  detail::Stopwatch clock;
  ConvergenceReport report = detail::start_report(cfg);
  const std::size_t n = cfg.n_paths;
  const std::size_t ne = cfg.eps.size();
  std::vector<int> family_levels;
  if (coarse < fine) family_levels.push_back(coarse);
  family_levels.push_back(fine);
  const std::size_t nl = family_levels.size();

  // occ[level][eps][path]
  std::vector<std::vector<std::vector<double>>> occ(
      nl, std::vector<std::vector<double>>(ne, std::vector<double>(n)));
  std::vector<std::size_t> hits(n, 0);

  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto family = simulate_coupled_family(cfg.problem, cfg.seed, i, family_levels);
      std::size_t h = 0;
      for (std::size_t l = 0; l < nl; ++l) {
        const GridPath& path = family[l];
        for (std::size_t e = 0; e < ne; ++e)
          occ[l][e][i] = occupation_near(path, cfg.z, cfg.eps[e], cfg.estimator);
        h += exact_zero_hits(path, sigma);
      }
      hits[i] = h;
    }
  });

  std::vector<double> fit_eps;
  std::vector<double> fit_mean;
  std::vector<double> fine_means(ne);
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t e = 0; e < ne; ++e) {
      const MeanEstimate m = estimate_mean(occ[l][e]);
      ReportRow row;
      row.level = family_levels[l];
      row.eps = cfg.eps[e];
      row.statistic = m.mean;
      row.ci_low = m.ci_low();
      row.ci_high = m.ci_high();
      row.n_paths = n;
      if (family_levels[l] == fine) {
        fine_means[e] = m.mean;
        const bool saturated = m.mean > cfg.saturation_fraction * cfg.problem.horizon;
        row.in_fit = keep[e] && !saturated && m.mean > 0.0;
        if (row.in_fit) {
          fit_eps.push_back(cfg.eps[e]);
          fit_mean.push_back(m.mean);
        }
      }
      report.rows.push_back(row);
    }
  }

  std::size_t total_hits = 0;
  for (std::size_t h : hits) total_hits += h;
  report.add_check("no_exact_zero_hits", total_hits == 0,
                   std::to_string(total_hits) + " grid values in the zero set");

  if (fit_eps.size() >= 2) {
    const double slope = detail::log_log_slope(fit_eps, fit_mean);
    report.metrics.emplace_back("slope", slope);
    report.add_check("slope_within_tolerance", std::abs(slope - target) <= cfg.slope_tolerance,
                     "slope " + detail::fmt(slope) + " vs target " + detail::fmt(target) +
                         " +/- " + detail::fmt(cfg.slope_tolerance));
  } else {
    report.add_check("slope_within_tolerance", false,
                     "fewer than two eps left after the saturation filter");
  }
  report.metrics.emplace_back("target_slope", target);
  report.metrics.emplace_back("fit_points", static_cast<double>(fit_eps.size()));
  if (nl == 2) {
    double max_rel = 0.0;
    for (std::size_t e = 0; e < ne; ++e) {
      const double c = report.rows[e].statistic;
      if (fine_means[e] > 0.0) max_rel = std::max(max_rel, std::abs(c - fine_means[e]) / fine_means[e]);
    }
    report.metrics.emplace_back("coarse_level", coarse);
    report.metrics.emplace_back("max_relative_level_change", max_rel);
  }
  report.finalize_verdict();
  report.wall_seconds = clock.seconds();
  return report;
}

/// Two arms started at x0 in Z(sigma): without the shift every path must stay
/// at x0 (terminal variance exactly 0); with it the terminal variance must be
/// positive with a 95% interval excluding 0.
inline ConvergenceReport run_trap_control(const StudyConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  const auto& sigma = cfg.problem.coefficient;
  if (!sigma.in_zero_set(cfg.problem.x0))
    throw PreconditionError("trap control requires x0 in the zero set of sigma");
  detail::Stopwatch clock;
  ConvergenceReport report = detail::start_report(cfg);
  const int level = cfg.levels.back();
  const std::size_t n = cfg.n_paths;

  std::vector<double> frozen_terminal(n);
  std::vector<char> frozen_constant(n);
  std::vector<double> shifted_terminal(n);
  std::vector<std::size_t> hits(n);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const BrownianLattice lattice = generate_lattice(cfg.seed, i, level, cfg.problem.horizon);
      const GridPath frozen = simulate_path(cfg.problem, lattice, ShiftPolicy::NoShift);
      frozen_terminal[i] = frozen.terminal();
      frozen_constant[i] = std::all_of(frozen.values.begin(), frozen.values.end(),
                                       [&](double x) { return x == cfg.problem.x0; });
      const GridPath shifted = simulate_path(cfg.problem, lattice, ShiftPolicy::Shift);
      shifted_terminal[i] = shifted.terminal();
      hits[i] = exact_zero_hits(shifted, sigma);
    }
  });

  auto variance_with_ci = [](const std::vector<double>& xs) {
    const MeanEstimate m = estimate_mean(xs);
    const double nn = static_cast<double>(xs.size());
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
      const double d = x - m.mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    const double var = xs.size() > 1 ? m2 / (nn - 1.0) : 0.0;
    const double central4 = m4 / nn;
    const double pop_var = m2 / nn;
    const double se = std::sqrt(std::max(central4 - pop_var * pop_var, 0.0) / nn);
    return std::array<double, 3>{var, var - kZ95 * se, var + kZ95 * se};
  };

  const auto frozen = variance_with_ci(frozen_terminal);
  const auto shifted = variance_with_ci(shifted_terminal);
  const bool all_constant = std::all_of(frozen_constant.begin(), frozen_constant.end(),
                                        [](char c) { return c != 0; });

  ReportRow a;
  a.level = level;
  a.arm = "no_shift";
  a.statistic = frozen[0];
  a.ci_low = frozen[1];
  a.ci_high = frozen[2];
  a.n_paths = n;
  report.rows.push_back(a);
  ReportRow b = a;
  b.arm = "shift";
  b.statistic = shifted[0];
  b.ci_low = shifted[1];
  b.ci_high = shifted[2];
  report.rows.push_back(b);

  report.add_check("no_shift_paths_constant", all_constant && frozen[0] == 0.0,
                   "terminal variance " + detail::fmt(frozen[0]));
  report.add_check("shift_variance_positive", shifted[1] > 0.0,
                   "95% interval [" + detail::fmt(shifted[1]) + ", " + detail::fmt(shifted[2]) + "]");
  std::size_t total_hits = 0;
  for (std::size_t h : hits) total_hits += h;
  report.metrics.emplace_back("shift_arm_zero_hits", static_cast<double>(total_hits));
  report.metrics.emplace_back("x_start", shift_initial(cfg.problem, level));
  report.finalize_verdict();
  report.wall_seconds = clock.seconds();
  return report;
}

inline ConvergenceReport run_study(const StudyConfig& cfg, unsigned workers = 1) {
  switch (cfg.kind) {
    case StudyKind::WeakKS: return run_weak_ks(cfg, workers);
    case StudyKind::StrongCauchy: return run_strong_cauchy(cfg, workers);
    case StudyKind::AbsStrongCauchy: return run_abs_strong_cauchy(cfg, workers);
    case StudyKind::OccupationScaling: return run_occupation_scaling(cfg, workers);
    case StudyKind::TrapControl: return run_trap_control(cfg, workers);
  }
  throw ConfigError("unknown study kind");
}

/// Total grid values and exact hits of Z(sigma) over `n_paths` dense paths.
struct ZeroHitCount {
  std::size_t grid_values = 0;
  std::size_t hits = 0;
};

inline ZeroHitCount count_zero_hits(const SdeProblem& problem, std::uint64_t seed,
                                    std::size_t n_paths, int level, unsigned workers = 1) {
  std::vector<std::size_t> hits(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const GridPath path = simulate_path(problem, generate_lattice(seed, i, level, problem.horizon));
      hits[i] = exact_zero_hits(path, problem.coefficient);
    }
  });
  ZeroHitCount out;
  out.grid_values = n_paths * (steps_at_level(level) + 1);
  for (std::size_t h : hits) out.hits += h;
  return out;
}

}  // namespace nonsticky
