#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>

#include "p2s/rng.hpp"

using namespace p2s;

TEST_CASE("philox4x32-10 matches the published known-answer vectors") {
  // Reference outputs from the Random123 distribution's kat_vectors file.
  auto zero = rng::philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du,
                                             0xbc57ac4cu, 0x9b00dbd8u});

  auto ones = rng::philox4x32(
      {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
      {0xffffffffu, 0xffffffffu});
  CHECK(ones == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu,
                                             0xa20bc7c6u, 0x6d5451fdu});

  auto pi = rng::philox4x32(
      {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
      {0xa4093822u, 0x299f31d0u});
  CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu,
                                           0x5001e420u, 0x24126ea1u});
}

TEST_CASE("draws are pure functions of counter and key") {
  double a0, a1, b0, b1;
  rng::normal_pair(42, 1234, 5, 6, a0, a1);
  rng::normal_pair(42, 1234, 5, 6, b0, b1);
  CHECK(a0 == b0);
  CHECK(a1 == b1);
  rng::normal_pair(43, 1234, 5, 6, b0, b1);
  CHECK(a0 != b0);
  rng::normal_pair(42, 1235, 5, 6, b0, b1);
  CHECK(a0 != b0);
  rng::normal_pair(42, 1234, 6, 6, b0, b1);
  CHECK(a0 != b0);
  rng::normal_pair(42, 1234, 5, 7, b0, b1);
  CHECK(a0 != b0);
}

TEST_CASE("normal pairs have standard-normal moments") {
  const std::size_t draws = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < draws / 2; ++i) {
    double z0, z1;
    rng::normal_pair(7, i, 0, 0, z0, z1);
    sum += z0 + z1;
    sum_sq += z0 * z0 + z1 * z1;
    CHECK(std::isfinite(z0));
    CHECK(std::isfinite(z1));
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}
