#pragma once

// Brownian increments on dyadic grids of [0, T]. Increment k of a level-L
// lattice is sqrt(T / 2^L) * Phi^-1(u_k), where u_k is fixed by
// (seed, path_index, k), so any path can be regenerated on its own.
// Coarser grids are obtained by pairwise summation, which couples all
// resolutions to one Brownian trajectory.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nonsticky/error.hpp"
#include "nonsticky/normal.hpp"
#include "nonsticky/philox.hpp"

namespace nonsticky {

inline constexpr int kMaxLevel = 26;

inline std::size_t steps_at_level(int level) noexcept {
  return std::size_t{1} << level;
}

inline void check_level(int level) {
  if (level < 0 || level > kMaxLevel)
    throw ConfigError("level " + std::to_string(level) +
                      " outside [0, " + std::to_string(kMaxLevel) + "]");
}

inline void check_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw ConfigError("horizon T must be positive and finite");
}

/// Writes increments [first, first + out.size()) of the level-`level`
/// lattice keyed by (seed, path_index). Streaming callers fill a window at a
/// time; the values do not depend on the window boundaries.
inline void fill_increments(std::uint64_t seed, std::uint64_t path_index,
                            int level, double horizon, std::size_t first,
                            std::span<double> out) {
  const double scale = std::sqrt(horizon / static_cast<double>(steps_at_level(level)));
  const RngKey key{seed, path_index, StreamDomain::BrownianIncrements};
  std::size_t k = first;
  std::size_t i = 0;
  if (k % 2 == 1 && i < out.size()) {
    out[i++] = scale * normal_quantile(uniform_pair(key, static_cast<std::uint32_t>(k / 2))[1]);
    ++k;
  }
  for (; i + 1 < out.size(); i += 2, k += 2) {
    const auto u = uniform_pair(key, static_cast<std::uint32_t>(k / 2));
    out[i] = scale * normal_quantile(u[0]);
    out[i + 1] = scale * normal_quantile(u[1]);
  }
  if (i < out.size())
    out[i] = scale * normal_quantile(uniform_pair(key, static_cast<std::uint32_t>(k / 2))[0]);
}

/// Replaces the first n/2 entries of `inc` (length n, even) with pairwise
/// sums and returns the halved view.
inline std::span<double> coarsen_in_place(std::span<double> inc) noexcept {
  const std::size_t half = inc.size() / 2;
  for (std::size_t j = 0; j < half; ++j) inc[j] = inc[2 * j] + inc[2 * j + 1];
  return inc.first(half);
}

class BrownianLattice {
 public:
  BrownianLattice(std::uint64_t seed, std::uint64_t path_index, int level,
                  double horizon, std::vector<double> increments)
      : seed_(seed),
        path_index_(path_index),
        level_(level),
        horizon_(horizon),
        increments_(std::move(increments)) {
    check_level(level_);
    check_horizon(horizon_);
    if (increments_.size() != steps_at_level(level_))
      throw PreconditionError("lattice increments must have length 2^level");
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t path_index() const noexcept { return path_index_; }
  int level() const noexcept { return level_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return increments_.size(); }
  double dt() const noexcept { return horizon_ / static_cast<double>(steps()); }
  std::span<const double> increments() const noexcept { return increments_; }

  /// W at the terminal time, summed left to right.
  double terminal() const noexcept {
    double w = 0.0;
    for (double d : increments_) w += d;
    return w;
  }

  friend bool operator==(const BrownianLattice&, const BrownianLattice&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t path_index_;
  int level_;
  double horizon_;
  std::vector<double> increments_;
};

inline BrownianLattice generate_lattice(std::uint64_t seed,
                                        std::uint64_t path_index, int level,
                                        double horizon = 1.0) {
  check_level(level);
  check_horizon(horizon);
  std::vector<double> inc(steps_at_level(level));
  fill_increments(seed, path_index, level, horizon, 0, inc);
  return BrownianLattice(seed, path_index, level, horizon, std::move(inc));
}

/// Level L-1 lattice with increment j = inc[2j] + inc[2j+1].
inline BrownianLattice coarsen(const BrownianLattice& lattice) {
  if (lattice.level() < 1)
    throw PreconditionError("coarsen: level-0 lattice cannot be coarsened");
  const auto inc = lattice.increments();
  std::vector<double> out(inc.size() / 2);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = inc[2 * j] + inc[2 * j + 1];
  return BrownianLattice(lattice.seed(), lattice.path_index(), lattice.level() - 1,
                         lattice.horizon(), std::move(out));
}

}  // namespace nonsticky
