#pragma once

#include <cstdint>
#include <random>

namespace syncsim {

/// splitmix64 step. Small, well-mixed generator used only to derive seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Independent random streams per concern. Keeping topology, clock, noise and
/// baseline draws on separate engines means adding draws to one concern never
/// shifts another, which is what makes reruns byte-identical.
enum class Stream : std::uint64_t {
  Topology = 1,
  Clocks = 2,
  Measurement = 3,
  Ats = 4,
  Admm = 5,
  Oracle = 6,
};

/// Deterministic substream engine for (seed, run, stream).
///
/// The three coordinates are folded through splitmix64 so that nearby seeds
/// or run indices land on unrelated engine states. Same inputs, same platform
/// independent draw sequence (mt19937_64 is fully specified by the standard).
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t run, Stream stream) {
  std::uint64_t s = seed;
  splitmix64(s);
  s ^= (run + 1) * 0xda942042e4dd58b5ull;
  splitmix64(s);
  s ^= static_cast<std::uint64_t>(stream) * 0x2545f4914f6cdd1dull;
  const std::uint64_t a = splitmix64(s);
  const std::uint64_t b = splitmix64(s);
  std::seed_seq seq{
      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace syncsim
