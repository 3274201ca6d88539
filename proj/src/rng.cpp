#include "slecut/rng.hpp"

#include <cmath>
#include <numbers>

namespace slecut {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  // 53 random bits, shifted off zero so log() is safe
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}
}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

std::array<double, 2> CounterRng::uniform_pair(std::uint64_t path, std::uint32_t step, std::uint32_t stream) const {
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32),
                                            step, stream};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_.value),
                                            static_cast<std::uint32_t>(seed_.value >> 32)};
  const auto r = philox4x32(ctr, key);
  return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

std::array<double, 2> CounterRng::normal_pair(std::uint64_t path, std::uint32_t step, std::uint32_t stream) const {
  const auto u = uniform_pair(path, step, stream);
  const double rad = std::sqrt(-2.0 * std::log(u[0]));
  const double ang = 2.0 * std::numbers::pi * u[1];
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

}  // namespace slecut
