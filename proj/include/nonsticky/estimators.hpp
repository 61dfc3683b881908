#pragma once

// Path functionals (occupation time, local time, sup distances) and Monte
// Carlo aggregation. Time integrals use the left-endpoint rule, matching the
// scheme, which freezes sigma at the left grid point of each step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

#include "nonsticky/coefficients.hpp"
#include "nonsticky/em_engine.hpp"
#include "nonsticky/error.hpp"

namespace nonsticky {

enum class OccupationKind { Indicator, Tent };

inline const char* to_string(OccupationKind k) {
  return k == OccupationKind::Indicator ? "indicator" : "tent";
}

/// Piecewise-linear bump: 1 at z, 0 outside (z - eps, z + eps).
inline double tent(double x, double z, double eps) noexcept {
  const double d = std::abs(x - z);
  return d < eps ? 1.0 - d / eps : 0.0;
}

inline double occupation_weight(OccupationKind kind, double x, double z,
                                double eps) noexcept {
  if (kind == OccupationKind::Indicator) return std::abs(x - z) < eps ? 1.0 : 0.0;
  return tent(x, z, eps);
}

/// Time spent near z on [0, T]: dt * sum_{k<n} w(X_{t_k}).
inline double occupation_near(const GridPath& path, double z, double eps,
                              OccupationKind kind) {
  if (!(eps > 0.0)) throw PreconditionError("occupation_near: eps must be positive");
  double acc = 0.0;
  const std::size_t n = path.steps();
  for (std::size_t k = 0; k < n; ++k) acc += occupation_weight(kind, path.values[k], z, eps);
  return acc * path.dt();
}

/// Number of grid values lying exactly in Z(sigma).
inline std::size_t exact_zero_hits(const GridPath& path, const CoefficientSpec& sigma) {
  return static_cast<std::size_t>(std::count_if(
      path.values.begin(), path.values.end(),
      [&](double x) { return sigma.in_zero_set(x); }));
}

/// Local time at y via the occupation formula, using sigma(X)^2 dt as the
/// quadratic variation density: (1/2eps) dt sum_k 1{|X_k - y| < eps} sigma(X_k)^2.
inline double local_time_estimate(const GridPath& path, const CoefficientSpec& sigma,
                                  double y, double eps) {
  if (!(eps > 0.0)) throw PreconditionError("local_time_estimate: eps must be positive");
  double acc = 0.0;
  const std::size_t n = path.steps();
  for (std::size_t k = 0; k < n; ++k) {
    const double x = path.values[k];
    if (std::abs(x - y) < eps) {
      const double s = sigma(x);
      acc += s * s;
    }
  }
  return acc * path.dt() / (2.0 * eps);
}

namespace detail {

template <class Transform>
double sup_difference_impl(const GridPath& a, const GridPath& b, Transform f) {
  if (a.horizon != b.horizon)
    throw PreconditionError("sup_difference: paths have different horizons");
  const GridPath& coarse = a.level <= b.level ? a : b;
  const GridPath& fine = a.level <= b.level ? b : a;
  const std::size_t nc = coarse.steps();
  const std::size_t nf = fine.steps();
  if (nc == 0 || nf % nc != 0)
    throw PreconditionError("sup_difference: grids do not nest");
  const std::size_t stride = nf / nc;
  double sup = 0.0;
  for (std::size_t k = 0; k <= nc; ++k)
    sup = std::max(sup, std::abs(f(coarse.values[k]) - f(fine.values[k * stride])));
  return sup;
}

}  // namespace detail

/// max over the coarser grid of |X_a - X_b|.
inline double sup_difference(const GridPath& a, const GridPath& b) {
  return detail::sup_difference_impl(a, b, [](double x) { return x; });
}

/// max over the coarser grid of ||X_a| - |X_b||.
inline double abs_sup_difference(const GridPath& a, const GridPath& b) {
  return detail::sup_difference_impl(a, b, [](double x) { return std::abs(x); });
}

// ---------------------------------------------------------------------------
// Aggregation

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr std::size_t kMinPathsForCi = 30;

/// Mergeable (count, sum, sum of squares) triple.
struct MomentAccumulator {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) noexcept {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const MomentAccumulator& o) noexcept {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const noexcept { return count ? sum / static_cast<double>(count) : 0.0; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const noexcept {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double v = (sum_sq - sum * sum / n) / (n - 1.0);
    return std::max(v, 0.0);
  }
  double standard_error() const noexcept {
    return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t n = 0;

  double ci_low() const noexcept { return mean - kZ95 * standard_error; }
  double ci_high() const noexcept { return mean + kZ95 * standard_error; }
};

/// Mean and standard error, summing in index order. A constant sample
/// reproduces its value exactly with zero standard error.
inline MeanEstimate estimate_mean(std::span<const double> xs) {
  MeanEstimate e;
  e.n = xs.size();
  if (xs.empty()) return e;
  if (std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>{}) == xs.end()) {
    e.mean = xs.front();
    return e;
  }
  double s = 0.0;
  for (double x : xs) s += x;
  const double n = static_cast<double>(xs.size());
  e.mean = s / n;
  if (xs.size() < 2) return e;
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  e.standard_error = std::sqrt(ss / (n - 1.0) / n);
  return e;
}

struct PNormEstimate {
  double p = 1.0;
  double value = 0.0;       ///< E[x^p]^(1/p)
  double half_width = 0.0;  ///< 95% half-width on E[x^p], before the root
  std::size_t n_paths = 0;
  bool ci_reliable = false;  ///< false when fewer than 30 samples

  double moment() const noexcept { return std::pow(value, p); }
  double ci_low() const noexcept {
    return std::pow(std::max(moment() - half_width, 0.0), 1.0 / p);
  }
  double ci_high() const noexcept { return std::pow(moment() + half_width, 1.0 / p); }
};

/// (mean of x^p)^(1/p) with a normal-approximation interval from the sample
/// variance of x^p.
inline PNormEstimate p_norm_aggregate(std::span<const double> samples, double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw PreconditionError("p_norm_aggregate: p must be >= 1");
  if (samples.empty()) throw PreconditionError("p_norm_aggregate: no samples");
  std::vector<double> powered(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] < 0.0 || !std::isfinite(samples[i]))
      throw PreconditionError("p_norm_aggregate: samples must be finite and nonnegative");
    powered[i] = p == 1.0 ? samples[i] : std::pow(samples[i], p);
  }
  const MeanEstimate m = estimate_mean(powered);
  PNormEstimate out;
  out.p = p;
  out.n_paths = samples.size();
  out.value = p == 1.0 ? m.mean : std::pow(m.mean, 1.0 / p);
  out.half_width = kZ95 * m.standard_error;
  out.ci_reliable = samples.size() >= kMinPathsForCi;
  return out;
}

}  // namespace nonsticky
