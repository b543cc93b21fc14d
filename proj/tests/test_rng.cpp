#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fshc/rng.hpp"

using namespace fshc;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  PhiloxStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differ_stream = false, differ_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u32();
    CHECK(x == b.next_u32());
    differ_stream |= x != c.next_u32();
    differ_seed |= x != d.next_u32();
  }
  CHECK(differ_stream);
  CHECK(differ_seed);
}

TEST_CASE("uniforms lie in the open unit interval with the right moments") {
  PhiloxStream rng(1, 0);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0);
    REQUIRE(u < 1);
    s += u;
    s2 += u * u;
  }
  CHECK(std::abs(s / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(s2 / n - 1.0 / 3) < 4 * std::sqrt(4.0 / 45 / n));
}

TEST_CASE("normal and exponential variates have unit variance") {
  PhiloxStream rng(5, 3);
  const int n = 200000;
  double m = 0, v = 0, e = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m += z;
    v += z * z;
    e += rng.exponential();
  }
  CHECK(std::abs(m / n) < 4 / std::sqrt(n));
  CHECK(std::abs(v / n - 1) < 4 * std::sqrt(2.0 / n));
  CHECK(std::abs(e / n - 1) < 4 / std::sqrt(n));
}
