#include <cmath>
#include <set>

#include "doctest.h"
#include "slecut/rng.hpp"

using namespace slecut;

TEST_CASE("philox4x32-10 known-answer vectors") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter streams are pure functions of (seed, path, step, stream)") {
  const CounterRng a(Seed{9}), b(Seed{9}), c(Seed{10});
  CHECK(a.normal_pair(3, 17) == b.normal_pair(3, 17));
  CHECK(a.normal_pair(3, 17) != c.normal_pair(3, 17));
  CHECK(a.normal_pair(3, 17) != a.normal_pair(4, 17));
  CHECK(a.normal_pair(3, 17) != a.normal_pair(3, 17, 1));
}

TEST_CASE("uniforms lie in (0,1) and normals have unit moments") {
  const CounterRng r(Seed{1234});
  double s = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto u = r.uniform_pair(0, static_cast<std::uint32_t>(i));
    REQUIRE(u[0] > 0);
    REQUIRE(u[0] < 1);
    REQUIRE(u[1] > 0);
    REQUIRE(u[1] < 1);
    const double z = r.normal(1, static_cast<std::uint32_t>(i));
    s += z, s2 += z * z, s4 += z * z * z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1) < 0.01);
  CHECK(std::abs(s4 / n - 3) < 0.05);
}
