#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace uam {

// All stochastic components draw from this engine. Boost distributions are
// used on top of it because their output is identical across standard
// library implementations.
using Rng = boost::random::mt19937_64;

/// SplitMix64 finalizer; maps (base, stream) pairs to well-separated seeds.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream tags for derive_seed.
inline constexpr std::uint64_t kDemandStream = 1;
inline constexpr std::uint64_t kExplorationStream = 2;
inline constexpr std::uint64_t kPoolStream = 3;
inline constexpr std::uint64_t kCalibrationStream = 4;

}  // namespace uam
