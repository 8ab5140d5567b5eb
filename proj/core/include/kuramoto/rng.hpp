#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// Counter-based random streams built on the splitmix64 mixer. Every draw is a
// pure function of (key, counter), so replicas and particles get independent
// streams that can be evaluated in any order, on any thread, with bit-stable
// results. Standard-library distributions are avoided on purpose: their
// algorithms are implementation-defined and would break byte-identical runs.

namespace kuramoto::rng {

/// splitmix64 finalizer (Vigna); bijective 64-bit avalanche mix.
constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Named sub-streams. Values are arbitrary distinct constants.
enum class Stream : std::uint64_t {
  disorder = 0x64697330u,
  init = 0x696e6974u,
  dynamics = 0x64796e61u,
  noise = 0x6e6f6973u,
  ou_mean = 0x6f756d65u,  // quenched Gaussian mean C(omega)
  ou_noise = 0x6f756e6fu,
};

/// Derives an independent stream key from (base, tag, index).
constexpr std::uint64_t derive(std::uint64_t base, Stream tag, std::uint64_t index = 0) {
  return mix(mix(mix(base) ^ static_cast<std::uint64_t>(tag)) + index);
}

constexpr std::uint64_t hash2(std::uint64_t key, std::uint64_t counter) {
  return mix(mix(counter) ^ key);
}

/// Uniform draw in the open interval (0, 1).
inline double uniform(std::uint64_t key, std::uint64_t counter) {
  const std::uint64_t bits = hash2(key, counter) >> 11;  // top 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; one value per counter.
inline double gaussian(std::uint64_t key, std::uint64_t counter) {
  const double u1 = uniform(key, 2 * counter);
  const double u2 = uniform(key, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace kuramoto::rng
