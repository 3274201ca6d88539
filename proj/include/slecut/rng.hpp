#pragma once
#include <array>
#include <cstdint>

namespace slecut {

struct Seed {
  std::uint64_t value = 0;
};

// Philox4x32-10. Pure function of (key, counter), so every draw is addressed
// by (seed, path, step, stream) and independent of scheduling.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

class CounterRng {
 public:
  explicit CounterRng(Seed seed) : seed_(seed) {}

  Seed seed() const { return seed_; }
  // Two independent uniforms in (0,1), 53-bit resolution.
  std::array<double, 2> uniform_pair(std::uint64_t path, std::uint32_t step, std::uint32_t stream = 0) const;
  // Two independent standard normals (Box-Muller).
  std::array<double, 2> normal_pair(std::uint64_t path, std::uint32_t step, std::uint32_t stream = 0) const;
  double normal(std::uint64_t path, std::uint32_t step, std::uint32_t stream = 0) const {
    return normal_pair(path, step, stream)[0];
  }

 private:
  Seed seed_;
};

}  // namespace slecut
