#include <doctest.h>

#include <cmath>
#include <vector>

#include "wlab/rng.hpp"

using namespace wlab;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Reference vectors from the Random123 test suite.
  {
    const std::uint32_t ctr[4] = {0, 0, 0, 0};
    const std::uint32_t key[2] = {0, 0};
    std::uint32_t out[4];
    RngStream::philox4x32_10(ctr, key, out);
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    const std::uint32_t ctr[4] = {0x243f6a88u, 0x85a308d3u, 0x13198a2eu,
                                  0x03707344u};
    const std::uint32_t key[2] = {0xa4093822u, 0x299f31d0u};
    std::uint32_t out[4];
    RngStream::philox4x32_10(ctr, key, out);
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("identical (seed, stream) reproduces identical draws") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(42, 7), d(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("distinct streams differ") {
  RngStream a(42, 0);
  RngStream b(42, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform draws live in (0,1) and have the right mean") {
  RngStream rng(1, 0);
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    acc += u;
  }
  CHECK(std::fabs(acc / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal draws match N(0,1) moments") {
  RngStream rng(2024, 5);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::fabs(s1 / n) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}
