#pragma once

// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "nonsticky/error.hpp"

namespace nonsticky {

/// Survival function of the Kolmogorov distribution,
/// Q(l) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 l^2).
/// Small arguments use the dual theta series, which converges fast there.
inline double kolmogorov_survival(double lambda) noexcept {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double w = -pi2 / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double j = 2.0 * k - 1.0;
      const double term = std::exp(j * j * w);
      cdf += term;
      if (term < 1e-18 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;  ///< D = sup |F_a - F_b|
  double p_value = 1.0;
  double effective_n = 0.0;
};

/// D over the pooled sample points and p = Q(sqrt(n_a n_b / (n_a + n_b)) D).
inline KsResult two_sample_ks(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("two_sample_ks: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  r.effective_n = na * nb / (na + nb);
  r.p_value = kolmogorov_survival(std::sqrt(r.effective_n) * d);
  return r;
}

}  // namespace nonsticky
