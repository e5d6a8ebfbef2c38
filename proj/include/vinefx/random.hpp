#pragma once

#include <cstdint>
#include <random>

namespace vinefx {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t
mix_seed(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t
substream_seed(std::uint64_t seed, std::uint64_t stream)
{
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t
substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
  return substream_seed(substream_seed(seed, a), b);
}

/// Uniform draw strictly inside (0, 1), 53 bits of resolution.
inline double
uniform_open(Rng& rng)
{
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform draw in [0, 1).
inline double
uniform01(Rng& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace vinefx
