#pragma once

#include <cstdint>
#include <random>

namespace blocknet {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream): streams of one seed never share
/// a state sequence in practice, and each is reproducible on its own
/// regardless of which thread draws from it.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

/// Stream tags used across the simulation code.
namespace streams {
inline constexpr std::uint64_t truth = 1;
inline constexpr std::uint64_t data = 2;
}  // namespace streams

/// SplitMix64 finalizer; derives per-replicate seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace blocknet
