// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace pinnflow {

// All randomness funnels through one master seed. Distinct consumers derive
// distinct streams via a purpose tag so adding a consumer does not shift the
// draws of existing ones.
namespace stream {
inline constexpr std::uint64_t kNetInit = 1;
inline constexpr std::uint64_t kDataSample = 2;
inline constexpr std::uint64_t kCollocationSample = 3;
inline constexpr std::uint64_t kValidationSplit = 4;
inline constexpr std::uint64_t kBatch = 5;
inline constexpr std::uint64_t kCloud = 6;
inline constexpr std::uint64_t kBoundary = 7;
}  // namespace stream

// splitmix64 finalizer; decorrelates (seed, tag) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag = 0) {
  return std::mt19937_64(mix_seed(seed, tag));
}

// Uniform in [0,1). Explicit bit mapping instead of
// std::uniform_real_distribution, whose output is implementation-defined.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace pinnflow
