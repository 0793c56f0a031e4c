#pragma once

#include <cstdint>
#include <random>

namespace luenn {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent random streams per frame. Alternate implementations reproduce
/// outputs by seeding std::mt19937_64 with
///   splitmix64(splitmix64(master + 0x9E3779B97F4A7C15 * (frame_id + 1)) ^ stream)
/// and drawing through the libstdc++ distribution algorithms.
enum class Stream : std::uint64_t {
    Emitters = 1,
    CameraNoise = 2,
    MapNoise = 3,
};

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t frame_id,
                                    Stream stream) noexcept {
    const std::uint64_t frame_key = splitmix64(master + 0x9E3779B97F4A7C15ULL * (frame_id + 1));
    return splitmix64(frame_key ^ static_cast<std::uint64_t>(stream));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t frame_id, Stream stream) {
    return Rng(derive_seed(master, frame_id, stream));
}

}  // namespace luenn
