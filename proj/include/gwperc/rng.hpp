#pragma once

#include <cstdint>

namespace gwperc {

/// SplitMix64 avalanche round (Steele, Lea & Flood; Vigna's constants).
constexpr std::uint64_t avalanche64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Identifier of the seed-mixing scheme, recorded in experiment results so
/// that runs stay reproducible across versions.
inline constexpr const char* kMixFunctionId = "splitmix64";

/// Derives the state of the private stream for one replicate from the
/// experiment seed and the replicate index. Counter-based: any replicate's
/// stream can be reconstructed without touching the others.
constexpr std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return avalanche64(seed ^ avalanche64(index * kGoldenGamma + 0x632BE59BD9B4E019ULL));
}

/// Small deterministic PRNG (SplitMix64 sequence). One instance per
/// replicate; never shared across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += kGoldenGamma;
        return avalanche64(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) noexcept { return next_double() < p; }

private:
    std::uint64_t state_;
};

}  // namespace gwperc
