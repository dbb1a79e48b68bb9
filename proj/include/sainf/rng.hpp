#pragma once

#include <cstdint>
#include <random>

namespace sainf {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Purpose tags for derived sub-streams. Each repetition of an experiment
/// draws its data, its problem instance and its bootstrap weights from
/// separate streams so that changing one consumer never shifts another.
enum class StreamTag : std::uint64_t {
  data = 1,
  problem = 2,
  bootstrap = 3,
  brownian = 4,
};

/// Seed of the sub-stream (master, tag, index). A pure function of its
/// arguments: repetition k sees the same randomness whichever thread runs it.
constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                                    std::uint64_t index = 0) noexcept {
  const auto t = static_cast<std::uint64_t>(tag);
  return splitmix64(splitmix64(master ^ splitmix64(t)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t master, StreamTag tag, std::uint64_t index = 0) {
  return Rng{derive_seed(master, tag, index)};
}

}  // namespace sainf
