#pragma once

// Euler-Maruyama scheme X_{k+1} = X_k + sigma(X_k) dW_k for dX = sigma(X) dW,
// started off the zero set of sigma.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nonsticky/brownian.hpp"
#include "nonsticky/coefficients.hpp"
#include "nonsticky/error.hpp"

namespace nonsticky {

/// Paths above this level are only available through stream_path().
inline constexpr int kMaxDenseLevel = 20;

struct SdeProblem {
  CoefficientSpec coefficient;
  double x0 = 0.0;
  double horizon = 1.0;

  void validate() const {
    check_horizon(horizon);
    if (!std::isfinite(x0)) throw ConfigError("x0 must be finite");
  }
};

/// Whether a start inside Z(sigma) is moved off it. NoShift exists to show
/// the scheme freezing at a zero of sigma.
enum class ShiftPolicy { Shift, NoShift };

struct GridPath {
  std::vector<double> values;  ///< n + 1 grid values, values[0] == x_start
  int level = 0;
  double x_start = 0.0;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  std::size_t steps() const noexcept { return values.size() - 1; }
  double dt() const noexcept { return horizon / static_cast<double>(steps()); }
  double terminal() const noexcept { return values.back(); }
};

/// Starting value used at `level`: x0 itself off Z(sigma), otherwise
/// x0 + sqrt(T) 2^(-level/2), repeated while the result is still a zero.
inline double shift_initial(const SdeProblem& problem, int level) {
  const auto& sigma = problem.coefficient;
  if (!sigma.in_zero_set(problem.x0)) return problem.x0;
  const double step = std::sqrt(problem.horizon) * std::exp2(-0.5 * level);
  double x = problem.x0 + step;
  while (sigma.in_zero_set(x)) x += step;
  return x;
}

/// Runs the recursion over `increments` from `x_start` into `out`
/// (size increments.size() + 1).
inline void euler_recursion(const CoefficientSpec& sigma, double x_start,
                            std::span<const double> increments,
                            std::span<double> out) {
  double x = x_start;
  out[0] = x;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    x += sigma(x) * increments[k];
    if (!std::isfinite(x))
      throw SimulationError("Euler state became non-finite at step " + std::to_string(k), k);
    out[k + 1] = x;
  }
}

inline double starting_value(const SdeProblem& problem, int level,
                             ShiftPolicy policy) {
  return policy == ShiftPolicy::Shift ? shift_initial(problem, level) : problem.x0;
}

inline GridPath simulate_path(const SdeProblem& problem,
                              const BrownianLattice& lattice,
                              ShiftPolicy policy = ShiftPolicy::Shift) {
  problem.validate();
  if (lattice.horizon() != problem.horizon)
    throw PreconditionError("simulate_path: lattice horizon differs from problem horizon");
  if (lattice.level() > kMaxDenseLevel)
    throw ConfigError("dense paths are limited to level " +
                      std::to_string(kMaxDenseLevel) + "; use stream_path");
  GridPath path;
  path.level = lattice.level();
  path.horizon = problem.horizon;
  path.seed = lattice.seed();
  path.path_index = lattice.path_index();
  path.x_start = starting_value(problem, lattice.level(), policy);
  path.values.resize(lattice.steps() + 1);
  euler_recursion(problem.coefficient, path.x_start, lattice.increments(), path.values);
  return path;
}

/// Paths at every level in `levels` (ascending, distinct) driven by one
/// Brownian trajectory: the finest lattice is generated once and coarsened.
inline std::vector<GridPath> simulate_coupled_family(
    const SdeProblem& problem, std::uint64_t seed, std::uint64_t path_index,
    std::span<const int> levels, ShiftPolicy policy = ShiftPolicy::Shift) {
  problem.validate();
  if (levels.empty()) throw PreconditionError("coupled family needs at least one level");
  if (!std::is_sorted(levels.begin(), levels.end()) ||
      std::adjacent_find(levels.begin(), levels.end()) != levels.end())
    throw PreconditionError("coupled family levels must be strictly ascending");
  for (int l : levels) check_level(l);
  const int finest = levels.back();
  if (finest > kMaxDenseLevel)
    throw ConfigError("coupled family is limited to level " +
                      std::to_string(kMaxDenseLevel));

  std::vector<double> inc(steps_at_level(finest));
  fill_increments(seed, path_index, finest, problem.horizon, 0, inc);
  std::span<double> view(inc);
  int current = finest;

  std::vector<GridPath> out(levels.size());
  for (std::size_t i = levels.size(); i-- > 0;) {
    while (current > levels[i]) {
      view = coarsen_in_place(view);
      --current;
    }
    GridPath& p = out[i];
    p.level = current;
    p.horizon = problem.horizon;
    p.seed = seed;
    p.path_index = path_index;
    p.x_start = starting_value(problem, current, policy);
    p.values.resize(view.size() + 1);
    euler_recursion(problem.coefficient, p.x_start, view, p.values);
  }
  return out;
}

/// Streams the level-`level` path (any level up to kMaxLevel) through
/// `visit(k, t_k, x_k)` for k = 0..n without storing it. Values agree
/// bitwise with simulate_path on the same keys.
template <class Visitor>
void stream_path(const SdeProblem& problem, std::uint64_t seed,
                 std::uint64_t path_index, int level, ShiftPolicy policy,
                 Visitor&& visit) {
  problem.validate();
  check_level(level);
  const std::size_t n = steps_at_level(level);
  const double dt = problem.horizon / static_cast<double>(n);
  constexpr std::size_t kWindow = 4096;
  std::vector<double> window(std::min(n, kWindow));
  double x = starting_value(problem, level, policy);
  visit(std::size_t{0}, 0.0, x);
  for (std::size_t first = 0; first < n; first += window.size()) {
    const std::size_t len = std::min(window.size(), n - first);
    std::span<double> w(window.data(), len);
    fill_increments(seed, path_index, level, problem.horizon, first, w);
    for (std::size_t j = 0; j < len; ++j) {
      x += problem.coefficient(x) * w[j];
      const std::size_t k = first + j + 1;
      if (!std::isfinite(x))
        throw SimulationError("Euler state became non-finite at step " +
                                  std::to_string(k - 1),
                              k - 1);
      visit(k, static_cast<double>(k) * dt, x);
    }
  }
}

}  // namespace nonsticky
