#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
// pure function of (key, counter): any stream position is reachable in O(1)
// and independent streams need no shared state.

#include <array>
#include <cstdint>

namespace nonsticky {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void philox_round(PhiloxCounter& c, const PhiloxKey& k) noexcept {
  const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    detail::philox_round(ctr, key);
  }
  return ctr;
}

/// Uniform on the open interval (0, 1) from the top 52 bits of `bits`.
/// With 53 bits the largest midpoint would round up to exactly 1.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Separates the independent uses of one (seed, index) pair.
enum class StreamDomain : std::uint32_t {
  BrownianIncrements = 1,
  OracleSamples = 2,
  Auxiliary = 3,
};

/// Identifies one random stream: user seed, per-path index, and purpose.
struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  StreamDomain domain = StreamDomain::Auxiliary;
};

/// Two uniforms in (0,1) at block `block` of the stream named by `key`.
///
/// The Philox key carries the seed; the counter carries (block, domain,
/// index) so distinct paths and purposes never share a counter value.
inline std::array<double, 2> uniform_pair(const RngKey& key,
                                          std::uint32_t block) noexcept {
  const PhiloxKey k{static_cast<std::uint32_t>(key.seed),
                    static_cast<std::uint32_t>(key.seed >> 32)};
  const PhiloxCounter c{block, static_cast<std::uint32_t>(key.domain),
                        static_cast<std::uint32_t>(key.index),
                        static_cast<std::uint32_t>(key.index >> 32)};
  const PhiloxCounter out = philox4x32_10(c, k);
  const std::uint64_t a = (std::uint64_t{out[0]} << 32) | out[1];
  const std::uint64_t b = (std::uint64_t{out[2]} << 32) | out[3];
  return {to_open_unit(a), to_open_unit(b)};
}

/// Sequential view of one keyed stream, for samplers that consume a
/// variable number of uniforms (rejection methods).
class CounterStream {
 public:
  explicit CounterStream(RngKey key) noexcept : key_(key) {}

  double uniform() noexcept {
    if (lane_ == 2) {
      buf_ = uniform_pair(key_, block_++);
      lane_ = 0;
    }
    return buf_[lane_++];
  }

 private:
  RngKey key_;
  std::uint32_t block_ = 0;
  int lane_ = 2;
  std::array<double, 2> buf_{};
};

}  // namespace nonsticky
