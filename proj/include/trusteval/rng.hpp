#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace trusteval {

// splitmix64 finalizer over (seed, stream). Decorrelates derived seeds so
// that per-slot or per-purpose engines are independent even when the stream
// indices are adjacent small integers.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(mix_seed(seed, stream));
}

// Uniform in [0, 1) built directly from the top 53 bits. The standard
// distribution adapters are implementation-defined, which would make file
// bytes differ across standard libraries; these helpers pin the exact draws.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Index in [0, n). Modulo bias is ~2^-53 for the sizes used here.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// Box-Muller normal draw; always consumes exactly two engine outputs.
inline double normal(std::mt19937_64& rng, double mean, double stddev) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; // (0,1), log-safe
    double u2 = uniform01(rng);
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    return mean + stddev * z;
}

} // namespace trusteval
