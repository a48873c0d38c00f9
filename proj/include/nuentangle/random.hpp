#pragma once

#include <cstdint>

namespace nuent {

/// splitmix64 stream (Vigna). One 64-bit word of state, full period 2^64.
/// Used everywhere a reproducible stream is needed: it is cheap to seed, so
/// Monte Carlo loops can derive an independent substream per event index and
/// stay bit-reproducible at any parallelism.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double next_in(double lo, double hi) { return lo + next_unit() * (hi - lo); }

    /// Substream keyed by (seed, index); distinct indices give statistically
    /// independent streams.
    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 mixer(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
        return SplitMix64(mixer.next_u64());
    }

  private:
    std::uint64_t state_;
};

} // namespace nuent
