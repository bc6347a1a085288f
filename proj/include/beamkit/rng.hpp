#pragma once

#include <cstdint>
#include <span>

namespace beamkit {

// ============================================================================
// Deterministic hashing primitives
//
// Every pseudo-random quantity in the library flows through these three
// functions so that runs are bit-identical across processes and thread
// counts. Constants are the widely used splitmix64 / FNV-1a 64 parameters.
// ============================================================================

inline constexpr std::uint64_t splitmix_gamma = 0x9E3779B97F4A7C15ULL;

/** splitmix64 finalizer applied to x + gamma; a stateless 64-bit mixer. */
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + splitmix_gamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/** FNV-1a 64 over a token sequence, one 64-bit word per token. */
constexpr std::uint64_t fnv1a64(std::span<const std::int32_t> tokens) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::int32_t t : tokens) {
    h ^= static_cast<std::uint64_t>(t);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/** Top 53 bits of u mapped to [0, 1). */
constexpr double unit_interval(std::uint64_t u) {
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

/** Sequential splitmix64 stream, used for corpus synthesis. */
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t out = splitmix64(state_);
    state_ += splitmix_gamma;
    return out;
  }

  /** Uniform draw in [0, n); n must be positive. */
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  double next_real() { return unit_interval(next()); }

 private:
  std::uint64_t state_;
};

}  // namespace beamkit
