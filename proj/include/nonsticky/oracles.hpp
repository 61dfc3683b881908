#pragma once

// Exact marginal law of the non-sticky solution of dX = |X|^a dW, a < 1/2.
// Y = g(X) = |X|^(2(1-a)) / (1-a)^2 is a squared Bessel process of dimension
// delta = (1-2a)/(1-a), and BESQ(delta) started at y0 has the Poisson-Gamma
// mixture marginal Y_t = 2t * Gamma(delta/2 + N), N ~ Poisson(y0 / (2t)).

#include <array>
#include <cmath>
#include <cstdint>

#include "nonsticky/error.hpp"
#include "nonsticky/normal.hpp"
#include "nonsticky/philox.hpp"

namespace nonsticky {

inline void check_cev_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw PreconditionError("exact oracle requires alpha in (0, 1/2)");
}

inline double besq_dimension(double alpha) {
  check_cev_alpha(alpha);
  return (1.0 - 2.0 * alpha) / (1.0 - alpha);
}

inline double g_transform(double x, double alpha) {
  check_cev_alpha(alpha);
  const double b = 1.0 - alpha;
  return std::pow(std::abs(x), 2.0 * b) / (b * b);
}

inline double g_inverse(double y, double alpha) {
  check_cev_alpha(alpha);
  if (!(y >= 0.0)) throw PreconditionError("g_inverse: y must be nonnegative");
  const double b = 1.0 - alpha;
  return std::pow(b, 1.0 / b) * std::pow(y, 1.0 / (2.0 * b));
}

struct BesqParams {
  double delta = 0.0;
  double y0 = 0.0;
  double t = 1.0;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw PreconditionError("BESQ dimension must be positive");
    if (!(y0 >= 0.0) || !std::isfinite(y0))
      throw PreconditionError("BESQ start must be nonnegative");
    if (!(t > 0.0) || !std::isfinite(t)) throw PreconditionError("BESQ time must be positive");
  }
  double mean() const noexcept { return y0 + delta * t; }
  double variance() const noexcept { return 2.0 * delta * t * t + 4.0 * y0 * t; }
};

namespace detail {

// log(k!) without touching the global signgam that lgamma writes.
inline double log_factorial(std::uint64_t k) noexcept {
  static constexpr std::array<double, 16> kFactorials = [] {
    std::array<double, 16> f{};
    f[0] = 1.0;
    for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] * static_cast<double>(i);
    return f;
  }();
  if (k < kFactorials.size()) return std::log(kFactorials[k]);
  // Stirling series; error below 1e-15 for n >= 16.
  const double n = static_cast<double>(k) + 1.0;
  const double inv = 1.0 / n;
  const double inv2 = inv * inv;
  return (n - 0.5) * std::log(n) - n + 0.91893853320467274178 +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
}

}  // namespace detail

/// Poisson(mean): multiplication method below 10, Hormann's PTRS above.
inline std::uint64_t sample_poisson(double mean, CounterStream& rng) {
  if (mean <= 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const auto k = static_cast<std::uint64_t>(kf);
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + kf * loglam - detail::log_factorial(k))
      return k;
  }
}

/// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1; smaller shapes
/// sample shape + 1 and multiply by U^(1/shape).
inline double sample_gamma(double shape, CounterStream& rng) {
  if (!(shape > 0.0)) throw PreconditionError("gamma shape must be positive");
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, rng);
    return g * std::pow(rng.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal_quantile(rng.uniform());
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// One exact draw of Y_t for BESQ(delta) started at y0.
inline double besq_exact_sample(const BesqParams& params, const RngKey& key) {
  params.validate();
  CounterStream rng(key);
  const std::uint64_t n = sample_poisson(params.y0 / (2.0 * params.t), rng);
  return 2.0 * params.t * sample_gamma(0.5 * params.delta + static_cast<double>(n), rng);
}

/// One exact draw of |X_t| for the non-sticky solution of dX = |X|^a dW.
inline double cev_nonsticky_exact_abs_sample(double alpha, double x0, double t,
                                             const RngKey& key) {
  const BesqParams params{besq_dimension(alpha), g_transform(x0, alpha), t};
  return g_inverse(besq_exact_sample(params, key), alpha);
}

}  // namespace nonsticky
