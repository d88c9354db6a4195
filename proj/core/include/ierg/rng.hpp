#pragma once

#include <cstdint>
#include <random>

#include <boost/random/taus88.hpp>
#include <boost/random/uniform_01.hpp>

namespace ierg {

/// Engine driving the outer chains, data generators and seed derivation.
using Rng = std::mt19937_64;

/// Small-state engine for per-row and per-draw substreams.
using StreamRng = boost::random::taus88;

/// splitmix64 finalizer; maps (seed, index) pairs to well-separated seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic substream for (seed, index).
inline StreamRng make_stream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t s = mix_seed(seed, index);
  return StreamRng(static_cast<std::uint32_t>(s ^ (s >> 32)));
}

template <class Engine>
double uniform01(Engine& eng) {
  return boost::random::uniform_01<double>{}(eng);
}

}  // namespace ierg
