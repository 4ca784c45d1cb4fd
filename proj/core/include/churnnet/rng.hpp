#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace churnnet {

// All randomized code in the library draws through these helpers so that a
// fixed seed yields identical streams regardless of platform stdlib quirks
// in std::*_distribution.
namespace rng {

inline double uniform01(std::mt19937_64& gen) {
  // 53-bit mantissa draw in [0, 1)
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), n > 0.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(gen) * static_cast<double>(n)) % n;
}

inline double exponential(std::mt19937_64& gen, double mean) {
  return -mean * std::log1p(-uniform01(gen));
}

inline double normal(std::mt19937_64& gen, double mu, double sigma) {
  // Box-Muller, one value per call
  double u1 = uniform01(gen);
  double u2 = uniform01(gen);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return mu + sigma * std::sqrt(-2.0 * std::log(u1)) *
                  std::cos(6.283185307179586476925286766559 * u2);
}

inline int poisson(std::mt19937_64& gen, double mean) {
  // Knuth's product method; fine for the small means used here
  double limit = std::exp(-mean);
  double prod = uniform01(gen);
  int k = 0;
  while (prod > limit) {
    prod *= uniform01(gen);
    ++k;
  }
  return k;
}

// FNV-1a, used to derive independent sub-seeds from (seed, tag) pairs and to
// fingerprint report provenance strings.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = fnv1a(tag);
  h ^= base + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

}  // namespace rng
}  // namespace churnnet
