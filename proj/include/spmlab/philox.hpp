#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace spm {

// Philox4x32-10 counter-based generator. Stateless: every draw is a pure
// function of (key, counter), so streams can be evaluated in any order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(Key key) : key_(key) {}
  explicit constexpr Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, k);
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  static constexpr Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  Key key_;
};

// Stream tags keep the drivers of different random objects disjoint.
enum class StreamTag : std::uint32_t {
  noise = 1,          // W^i increments
  particle = 2,       // idiosyncratic B increments
  initial = 3,        // initial position sampling
  mollified_sde = 4,  // diffusion experiment drivers
  test_field = 5,     // random test fields in diagnostics
  signal = 6,         // hidden signal of the filtering demo
};

// Uniform in (0, 1], 53-bit resolution.
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (std::uint64_t{lo} >> 11);
  return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 1.0) * 0x1.0p-53;
}

// Standard normal pair for counter (index, channel, tag) under seed.
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t index,
                                         std::uint32_t channel, StreamTag tag) {
  const Philox4x32 gen(seed);
  const auto r = gen({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      channel, static_cast<std::uint32_t>(tag)});
  const double u1 = to_unit_open(r[0], r[1]);
  const double u2 = to_unit_open(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

inline double standard_normal(std::uint64_t seed, std::uint64_t index, std::uint32_t channel,
                              StreamTag tag) {
  return normal_pair(seed, index, channel, tag)[0];
}

inline double uniform_open(std::uint64_t seed, std::uint64_t index, std::uint32_t channel,
                           StreamTag tag) {
  const Philox4x32 gen(seed);
  const auto r = gen({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      channel, static_cast<std::uint32_t>(tag)});
  return to_unit_open(r[0], r[1]);
}

// Derives an independent 64-bit seed for realization r of a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t r) {
  const Philox4x32 gen(base);
  const auto out = gen({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32),
                        0xA5A5A5A5u, 0x5EED0000u});
  return (std::uint64_t{out[0]} << 32) | out[1];
}

}  // namespace spm
