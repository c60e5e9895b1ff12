#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace ineq {

// Engine and distributions come from Boost.Random so that draws are identical
// across standard libraries.
using Rng = boost::random::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream for (seed, index, sub); replicate b of a run uses index b,
// so results do not depend on the order in which replicates are processed.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t sub = 0) {
  return Rng(splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (sub * 0xD1B54A32D192ED03ULL)));
}

}  // namespace ineq
