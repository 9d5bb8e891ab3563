#pragma once

#include <cstdint>

// Tags for the counter-based RNG, one per consumer, so that draws for the
// same (seed, replica) never collide across consumers.
namespace shelab::streams {

inline constexpr std::uint32_t kLatticeNoise = 1;
inline constexpr std::uint32_t kBrownianPath = 2;
inline constexpr std::uint32_t kCramer = 3;
inline constexpr std::uint32_t kPseudoStationarity = 4;
inline constexpr std::uint32_t kConvolutionProfile = 5;

}  // namespace shelab::streams

namespace shelab::streams {

// splitmix64 finaliser; derives independent seeds from one user seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace shelab::streams
