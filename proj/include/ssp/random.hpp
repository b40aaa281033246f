#pragma once

#include <cstdint>

namespace ssp {

/// SplitMix64 output mix (Steele, Lea & Flood, 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Key of stream `index` under `seed`: mix(mix(seed + gamma) + (index + 1) * gamma).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64_mix(splitmix64_mix(seed + kGoldenGamma) + (index + 1) * kGoldenGamma);
}

/// Counter-based generator: the k-th draw (k = 1, 2, ...) is mix(key + k * gamma).
/// This is exactly SplitMix64 seeded with `key`, so any implementation of the
/// three constants above reproduces the stream bit for bit.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    constexpr std::uint64_t next_u64() { return splitmix64_mix(key_ + (++counter_) * kGoldenGamma); }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n > 0. Multiply-shift, negligible bias for small n.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    constexpr std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace ssp
