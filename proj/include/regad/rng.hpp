#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace regad {

// splitmix64; used to derive independent substreams from one run seed so that
// e.g. support sampling and augmentation keep their own deterministic streams.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x243f6a8885a308d3ULL;
    for (uint64_t p : parts) h = mix64(h ^ p);
    return h;
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

inline std::mt19937_64 make_rng(std::initializer_list<uint64_t> parts) {
    return std::mt19937_64(mix_seed(parts));
}

// Uniform integer in [0, n), avoiding distribution objects so sequences are
// identical across standard library implementations.
inline uint64_t rand_index(std::mt19937_64& rng, uint64_t n) {
    const uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
    uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

inline double rand_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
}

inline double rand_uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * rand_uniform(rng);
}

inline double rand_normal(std::mt19937_64& rng) {
    // Marsaglia polar method, deterministic across platforms.
    double u, v, s;
    do {
        u = 2.0 * rand_uniform(rng) - 1.0;
        v = 2.0 * rand_uniform(rng) - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
}

}  // namespace regad
