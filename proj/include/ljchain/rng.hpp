#pragma once

#include <cstdint>

// Counter-based random numbers: every variate is a pure function of
// (seed, stream, counter), so realizations are reproducible bit-for-bit
// no matter how work is scheduled across threads.
namespace ljchain::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives an independent key per (seed, stream) pair.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed + kGolden) ^ (0xD1B54A32D192ED03ull + stream * kGolden));
}

// i-th output of the stream identified by `key` (= splitmix64 started at key).
inline std::uint64_t at(std::uint64_t key, std::uint64_t counter) {
  return mix64(key + (counter + 1) * kGolden);
}

// Uniform double in [0, 1), 53 random bits.
inline double to_unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t key, std::uint64_t counter) {
  return to_unit_double(at(key, counter));
}

}  // namespace ljchain::rng
