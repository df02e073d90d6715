#pragma once

#include <cstdint>
#include <random>

namespace must {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Pipeline stages that draw random numbers. Values are part of the seed
/// derivation and must not be renumbered.
enum class Stage : std::uint64_t {
    synth = 1,
    weight_init = 2,
    shuffle = 3,
    split = 4,
};

/// Per-stage seed from the global seed: mix64(seed ^ mix64(stage)).
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, Stage stage) {
    return mix64(global_seed ^ mix64(static_cast<std::uint64_t>(stage)));
}

/// Sub-stream of a stage seed, e.g. one per recording or per run.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 0x100));
}

using Rng = std::mt19937_64;

/// Uniform in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementations.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace must
