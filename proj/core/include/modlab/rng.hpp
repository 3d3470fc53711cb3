#pragma once

#include <cstdint>

namespace modlab {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so runs are reproducible regardless of
// evaluation order and across platforms. The mixer is the SplitMix64
// finalizer applied twice.
inline std::uint64_t rng_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t rng_u64(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
  return rng_mix(rng_mix(seed ^ (stream * 0xA24BAED4963EE407ULL)) + counter);
}

// Uniform double in [0, 1).
inline double rng_uniform(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t counter) {
  return static_cast<double>(rng_u64(seed, stream, counter) >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
inline std::uint64_t rng_below(std::uint64_t seed, std::uint64_t stream,
                               std::uint64_t counter, std::uint64_t n) {
  return n == 0 ? 0 : rng_u64(seed, stream, counter) % n;
}

// Convenience stream that advances its own counter.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double uniform() { return rng_uniform(seed_, stream_, counter_++); }
  std::uint64_t below(std::uint64_t n) {
    return rng_below(seed_, stream_, counter_++, n);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace modlab
