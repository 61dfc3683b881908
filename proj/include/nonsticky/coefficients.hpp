#pragma once

// Diffusion coefficients sigma for dX = sigma(X) dW, their zero sets, and the
// integrability test of 1/sigma^2 around a level.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nonsticky/error.hpp"

namespace nonsticky {

enum class CoefficientKind {
  PowerLaw,     ///< |x|^alpha
  OddPowerLaw,  ///< sgn(x) |x|^alpha
  Custom,       ///< user function with a declared zero set
};

inline const char* to_string(CoefficientKind k) {
  switch (k) {
    case CoefficientKind::PowerLaw: return "power_law";
    case CoefficientKind::OddPowerLaw: return "odd_power_law";
    case CoefficientKind::Custom: return "custom";
  }
  return "?";
}

/// An immutable diffusion coefficient together with its zero set Z(sigma)
/// and a linear growth constant K with |sigma(x)| <= K (1 + |x|).
///
/// Custom coefficients must declare every zero; no root finding is done.
/// Evaluation at a declared zero returns exactly 0 regardless of what the
/// wrapped function computes there.
class CoefficientSpec {
 public:
  using Function = std::function<double(double)>;

  static CoefficientSpec power_law(double alpha, double growth_constant = 1.0) {
    return make_power(CoefficientKind::PowerLaw, alpha, growth_constant);
  }

  static CoefficientSpec odd_power_law(double alpha,
                                       double growth_constant = 1.0) {
    return make_power(CoefficientKind::OddPowerLaw, alpha, growth_constant);
  }

  /// `continuity_attested` records the caller's claim that sigma is
  /// continuous a.e. with positive liminf of sigma^2 at its discontinuities.
  /// It is carried along, never verified.
  static CoefficientSpec custom(Function fn, std::vector<double> zero_set,
                                double growth_constant,
                                bool continuity_attested = false,
                                std::string label = "custom") {
    if (!fn) throw ConfigError("custom coefficient needs a callable");
    CoefficientSpec s;
    s.kind_ = CoefficientKind::Custom;
    s.fn_ = std::make_shared<const Function>(std::move(fn));
    s.label_ = std::move(label);
    s.attested_ = continuity_attested;
    s.set_zero_set(std::move(zero_set));
    s.set_growth(growth_constant);
    s.check_growth_on_grid();
    return s;
  }

  /// sigma == value everywhere; empty zero set unless value == 0.
  static CoefficientSpec constant(double value) {
    if (!std::isfinite(value) || value == 0.0)
      throw ConfigError("constant coefficient must be finite and non-zero");
    auto s = custom([value](double) { return value; }, {},
                    std::max(std::abs(value), 1e-300), true, "constant");
    s.constant_ = value;
    return s;
  }

  CoefficientKind kind() const noexcept { return kind_; }
  bool is_power_law() const noexcept {
    return kind_ == CoefficientKind::PowerLaw ||
           kind_ == CoefficientKind::OddPowerLaw;
  }
  /// Exponent for the power-law kinds.
  std::optional<double> alpha() const noexcept {
    if (is_power_law()) return alpha_;
    return std::nullopt;
  }
  /// Value for coefficients built with constant().
  std::optional<double> constant_value() const noexcept { return constant_; }
  std::span<const double> zero_set() const noexcept { return zero_set_; }
  double growth_constant() const noexcept { return growth_; }
  bool continuity_attested() const noexcept { return attested_; }
  const std::string& label() const noexcept { return label_; }

  bool in_zero_set(double x) const noexcept {
    return std::binary_search(zero_set_.begin(), zero_set_.end(), x);
  }

  /// sigma(x). Throws EvaluationError if a custom function is non-finite.
  double operator()(double x) const {
    switch (kind_) {
      case CoefficientKind::PowerLaw:
        return abs_power(std::abs(x));
      case CoefficientKind::OddPowerLaw: {
        const double m = abs_power(std::abs(x));
        return x < 0.0 ? -m : m;
      }
      case CoefficientKind::Custom:
        break;
    }
    if (in_zero_set(x)) return 0.0;
    const double v = (*fn_)(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "coefficient '" << label_ << "' is not finite at x = " << x;
      throw EvaluationError(os.str(), x);
    }
    return v;
  }

 private:
  CoefficientSpec() = default;

  static CoefficientSpec make_power(CoefficientKind kind, double alpha,
                                    double growth) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("power-law exponent must lie in (0, 1)");
    CoefficientSpec s;
    s.kind_ = kind;
    s.alpha_ = alpha;
    s.label_ = to_string(kind);
    s.attested_ = true;
    s.zero_set_ = {0.0};
    s.set_growth(growth);
    s.check_growth_on_grid();
    return s;
  }

  // Specialised branches keep the hot loop away from pow() for the common
  // exponents; each x always takes the same branch so results are stable.
  double abs_power(double ax) const noexcept {
    if (alpha_ == 0.5) return std::sqrt(ax);
    if (alpha_ == 0.25) return std::sqrt(std::sqrt(ax));
    if (ax == 0.0) return 0.0;
    return std::pow(ax, alpha_);
  }

  void set_zero_set(std::vector<double> z) {
    for (double v : z)
      if (!std::isfinite(v)) throw ConfigError("zero set entries must be finite");
    std::sort(z.begin(), z.end());
    if (std::adjacent_find(z.begin(), z.end()) != z.end())
      throw ConfigError("zero set contains duplicates");
    zero_set_ = std::move(z);
  }

  void set_growth(double k) {
    if (!(k > 0.0) || !std::isfinite(k))
      throw ConfigError("linear growth constant must be positive and finite");
    growth_ = k;
  }

  void check_growth_on_grid() const {
    for (int i = -1000; i <= 1000; ++i) {
      const double x = i * 0.01;
      const double bound = growth_ * (1.0 + std::abs(x));
      if (std::abs((*this)(x)) > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "coefficient '" << label_ << "' violates |sigma(x)| <= K(1+|x|)"
           << " at x = " << x << " with K = " << growth_;
        throw ConfigError(os.str());
      }
    }
  }

  CoefficientKind kind_ = CoefficientKind::Custom;
  double alpha_ = 0.0;
  std::optional<double> constant_;
  std::shared_ptr<const Function> fn_;
  std::vector<double> zero_set_;
  double growth_ = 1.0;
  bool attested_ = false;
  std::string label_;
};

inline double evaluate_sigma(const CoefficientSpec& spec, double x) {
  return spec(x);
}

// ---------------------------------------------------------------------------
// Integrability of 1/sigma^2 near a level

enum class Integrability {
  VanishesAsEpsToZero,
  FiniteNonVanishing,
  Divergent,
};

inline const char* to_string(Integrability c) {
  switch (c) {
    case Integrability::VanishesAsEpsToZero: return "VanishesAsEpsToZero";
    case Integrability::FiniteNonVanishing: return "FiniteNonVanishing";
    case Integrability::Divergent: return "Divergent";
  }
  return "?";
}

struct IntegrabilityVerdict {
  double z = 0.0;
  /// (eps, integral of sigma(z+y)^-2 over [-eps, eps]) in ladder order.
  std::vector<std::pair<double, double>> integral_values;
  Integrability classification = Integrability::Divergent;
};

namespace detail {

inline constexpr double kQuadratureTolerance = 1e-11;
inline constexpr double kAcceptedRelativeError = 1e-8;
// A shell sum is treated as divergent once this many consecutive decade
// shells fail to shrink by at least 1%.
inline constexpr int kNonDecayShells = 5;
inline constexpr double kNonDecayRatio = 0.99;
inline constexpr int kMaxShells = 400;

inline constexpr int kMaxQuadratureIntervals = 4000;

// Globally adaptive Gauss-Kronrod: repeatedly bisects the interval with the
// largest |K15 - G7| until the summed estimate meets the tolerance.
template <class F>
double smooth_integral(const F& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  struct Piece {
    double lo, hi, value, error;
  };
  auto eval = [&](double a, double b) {
    const double v = Kronrod::integrate(f, a, b, 0, 0.0);
    return Piece{a, b, v, std::abs(v - Gauss::integrate(f, a, b))};
  };
  auto by_error = [](const Piece& a, const Piece& b) { return a.error < b.error; };
  std::vector<Piece> heap{eval(lo, hi)};
  double value = heap.front().value;
  double error = heap.front().error;
  while (error > kQuadratureTolerance * std::abs(value) && std::isfinite(value) &&
         static_cast<int>(heap.size()) < kMaxQuadratureIntervals) {
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Piece worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), by_error);
      break;
    }
    for (const Piece& p : {eval(worst.lo, mid), eval(mid, worst.hi)}) {
      heap.push_back(p);
      std::push_heap(heap.begin(), heap.end(), by_error);
    }
    value = 0.0;
    error = 0.0;
    for (const Piece& p : heap) {
      value += p.value;
      error += p.error;
    }
  }
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "non-finite quadrature on [" << lo << ", " << hi
       << "]; is a zero of sigma missing from the zero set?";
    throw NumericalError(os.str(), std::numeric_limits<double>::infinity());
  }
  const double rel = error / std::max(std::abs(value), 1e-300);
  if (rel > kAcceptedRelativeError) {
    std::ostringstream os;
    os << "quadrature on [" << lo << ", " << hi
       << "] did not converge, achieved relative error " << rel;
    throw NumericalError(os.str(), rel);
  }
  return value;
}

// Integral of h(u) = 1/sigma(s + dir*u)^2 for u in (0, width], singular at
// u = 0. Sums decade shells [w 10^-(k+1), w 10^-k] and extrapolates the
// remaining geometric tail. Returns +inf if the shells stop decaying.
template <class Sigma>
double singular_half(const Sigma& sigma, double s, int dir, double width) {
  auto h = [&](double u) {
    const double v = sigma(s + dir * u);
    return 1.0 / (v * v);
  };
  const double floor_offset = std::max(std::abs(s) * 1e-13, 1e-280);
  double total = 0.0;
  double prev = -1.0;
  double ratio = 0.0;
  int non_decay = 0;
  double hi = width;
  for (int k = 0; k < kMaxShells; ++k) {
    const double lo = hi / 10.0;
    const double shell = smooth_integral(h, lo, hi);
    if (!std::isfinite(shell)) return std::numeric_limits<double>::infinity();
    if (prev > 0.0) {
      ratio = shell / prev;
      non_decay = ratio > kNonDecayRatio ? non_decay + 1 : 0;
      if (non_decay >= kNonDecayShells)
        return std::numeric_limits<double>::infinity();
    }
    total += shell;
    prev = shell;
    hi = lo;
    if (shell <= 1e-16 * total && k > 0) return total;
    if (lo < floor_offset) break;
  }
  // Offsets can no longer be resolved next to s; extrapolate with the last
  // observed shell ratio.
  if (ratio >= kNonDecayRatio) return std::numeric_limits<double>::infinity();
  return total + prev * ratio / (1.0 - ratio);
}

}  // namespace detail

/// Integral of sigma(z+y)^-2 over y in [-eps, eps].
///
/// Closed form 2 eps^(1-2a) / (1-2a) for the power-law kinds at z = 0;
/// otherwise Gauss-Kronrod quadrature split at every zero inside the window,
/// with a decade-shell sum toward each zero. Returns +inf when divergent.
inline double inverse_square_integral(const CoefficientSpec& spec, double z,
                                      double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw PreconditionError("inverse_square_integral: eps must be positive");
  if (!std::isfinite(z))
    throw PreconditionError("inverse_square_integral: z must be finite");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (spec.is_power_law() && z == 0.0) {
    const double gamma = 1.0 - 2.0 * *spec.alpha();
    if (gamma <= 0.0) return kInf;
    return 2.0 * std::pow(eps, gamma) / gamma;
  }

  const double a = z - eps;
  const double b = z + eps;
  std::vector<double> cuts{a};
  bool a_singular = false;
  bool b_singular = false;
  for (double zero : spec.zero_set()) {
    if (zero == a) a_singular = true;
    else if (zero == b) b_singular = true;
    else if (zero > a && zero < b) cuts.push_back(zero);
  }
  cuts.push_back(b);

  auto inv_sq = [&](double x) {
    const double v = spec(x);
    return 1.0 / (v * v);
  };

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    const bool lo_sing = (i == 0) ? a_singular : true;
    const bool hi_sing = (i + 2 == cuts.size()) ? b_singular : true;
    const double mid = 0.5 * (lo + hi);
    double piece = 0.0;
    if (lo_sing)
      piece += detail::singular_half(spec, lo, +1, mid - lo);
    else
      piece += detail::smooth_integral(inv_sq, lo, mid);
    if (hi_sing)
      piece += detail::singular_half(spec, hi, -1, hi - mid);
    else
      piece += detail::smooth_integral(inv_sq, mid, hi);
    if (!std::isfinite(piece)) return kInf;
    total += piece;
  }
  return total;
}

/// eps ladder 1e-1, 1e-2, ..., 1e-6.
inline std::vector<double> default_eps_ladder() {
  std::vector<double> out;
  double e = 0.1;
  for (int i = 0; i < 6; ++i, e /= 10.0) out.push_back(e);
  return out;
}

/// Classifies the behaviour of the inverse-square integral at level z as eps
/// shrinks along `ladder` (which must be strictly decreasing).
///
/// Divergent when every ladder value is infinite. Otherwise the value must
/// still be decreasing over the final decade (log-log slope above 0.01) to
/// count as vanishing.
inline IntegrabilityVerdict classify_level(
    const CoefficientSpec& spec, double z,
    std::span<const double> ladder = {}) {
  std::vector<double> eps_values(ladder.begin(), ladder.end());
  if (eps_values.empty()) eps_values = default_eps_ladder();
  if (eps_values.size() < 2)
    throw PreconditionError("classify_level: ladder needs at least two eps");
  for (std::size_t i = 1; i < eps_values.size(); ++i)
    if (!(eps_values[i] < eps_values[i - 1]))
      throw PreconditionError("classify_level: ladder must be decreasing");

  IntegrabilityVerdict verdict;
  verdict.z = z;
  bool all_infinite = true;
  for (double eps : eps_values) {
    const double v = inverse_square_integral(spec, z, eps);
    verdict.integral_values.emplace_back(eps, v);
    if (std::isfinite(v)) all_infinite = false;
  }
  if (all_infinite) {
    verdict.classification = Integrability::Divergent;
    return verdict;
  }
  const auto [e1, v1] = verdict.integral_values[verdict.integral_values.size() - 2];
  const auto [e2, v2] = verdict.integral_values.back();
  const double slope = std::log(v1 / v2) / std::log(e1 / e2);
  verdict.classification = (std::isfinite(v1) && v2 > 0.0 && slope > 0.01)
                               ? Integrability::VanishesAsEpsToZero
                               : Integrability::FiniteNonVanishing;
  if (!std::isfinite(v1)) verdict.classification = Integrability::VanishesAsEpsToZero;
  return verdict;
}

}  // namespace nonsticky
