#ifndef QPROBE_RANDOM_HPP
#define QPROBE_RANDOM_HPP

#include <cstdint>
#include <random>

namespace qprobe {

/// Engine used for every stochastic draw. Each independent stream is seeded
/// with a 64-bit value obtained from derive_seed, so results depend only on
/// the recorded seeds and never on scheduling.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based child seed: stream `index` of parent `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t outer,
                                    std::uint64_t inner) noexcept {
  return derive_seed(derive_seed(seed, outer), inner);
}

inline Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

}  // namespace qprobe

#endif  // QPROBE_RANDOM_HPP
