// Seeded, splittable random streams.
//
// Every stochastic routine in this library draws from a Stream that is
// derived from a master seed plus an integer path (observation index,
// replicate index, scenario cell, ...).  Streams derived from distinct
// paths are statistically independent, so work can be re-ordered or
// parallelized without changing any result.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace residuum {

// SplitMix64 finalizer; good avalanche, used only for key mixing.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Collapse a master seed plus a key path into a single 64-bit stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t k : path) h = mix64(h ^ mix64(k));
  return h;
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  static Stream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return Stream(derive_seed(master, path));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53 random bits; bit-reproducible on any platform.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0,1): exact 0 is rejected and redrawn,
  // exact 1 cannot occur at 53-bit resolution.
  double uniform_open() {
    for (;;) {
      const double u = uniform();
      if (u > 0.0) return u;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace residuum
