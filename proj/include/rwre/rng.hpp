#pragma once

#include <cstdint>

namespace rwre {

// 64-bit finalizer from SplitMix64 (Vigna / Steele et al.); full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Counter-based hash chain over vertex addresses. The state at a vertex is a
// pure function of (seed, address), so environments realized lazily at depth
// 10^4+ agree bit-exactly with any other traversal order.
constexpr std::uint64_t chain_root(std::uint64_t seed) noexcept {
    return mix64(seed + kGolden);
}

constexpr std::uint64_t chain_child(std::uint64_t state, unsigned digit) noexcept {
    return mix64(state ^ (kGolden * (static_cast<std::uint64_t>(digit) + 2)));
}

constexpr double u01_from_bits(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential stream for walk randomness; replica streams are derived from
// (seed, index) so results do not depend on how work is partitioned.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept { return mix64(state_ += kGolden); }
    double uniform01() noexcept { return u01_from_bits(next()); }

    static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) noexcept {
        return SplitMix64(mix64(seed + kGolden * (index + 1)));
    }

  private:
    std::uint64_t state_;
};

}  // namespace rwre
