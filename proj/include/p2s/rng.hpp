#ifndef P2S_RNG_HPP
#define P2S_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). Every draw is a pure function of
// (counter, key), so noise can be assigned per (voxel, volume, channel)
// and the result never depends on evaluation order or thread schedule.

namespace p2s::rng {

struct Counter {
  std::uint32_t x0 = 0, x1 = 0, x2 = 0, x3 = 0;
};

struct Key {
  std::uint32_t k0 = 0, k1 = 0;
};

namespace detail {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Counter round(Counter c, Key k) {
  constexpr std::uint32_t M0 = 0xD2511F53u;
  constexpr std::uint32_t M1 = 0xCD9E8D57u;
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(M0, c.x0, hi0, lo0);
  mulhilo(M1, c.x2, hi1, lo1);
  return {hi1 ^ c.x1 ^ k.k0, lo1, hi0 ^ c.x3 ^ k.k1, lo0};
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32(Counter c, Key k) {
  constexpr std::uint32_t W0 = 0x9E3779B9u;
  constexpr std::uint32_t W1 = 0xBB67AE85u;
  c = detail::round(c, k);
  for (int i = 1; i < 10; ++i) {
    k.k0 += W0;
    k.k1 += W1;
    c = detail::round(c, k);
  }
  return {c.x0, c.x1, c.x2, c.x3};
}

inline Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed),
          static_cast<std::uint32_t>(seed >> 32)};
}

// Two independent standard normals via Box-Muller from one Philox block.
// u1 lands in (0, 1] so the log is always finite.
inline void normal_pair(std::uint64_t seed, std::uint64_t voxel,
                        std::uint32_t volume, std::uint32_t channel,
                        double& z0, double& z1) {
  const Counter ctr{static_cast<std::uint32_t>(voxel),
                    static_cast<std::uint32_t>(voxel >> 32), volume, channel};
  const auto w = philox4x32(ctr, key_from_seed(seed));
  constexpr double two_neg32 = 1.0 / 4294967296.0;
  const double u1 = (static_cast<double>(w[0]) + 1.0) * two_neg32;
  const double u2 = (static_cast<double>(w[1]) + 0.5) * two_neg32;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
  z0 = r * std::cos(theta);
  z1 = r * std::sin(theta);
}

}  // namespace p2s::rng

#endif
