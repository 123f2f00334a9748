#pragma once

// Reproducible random streams.
//
// Sequential streams use std::mt19937_64 (its output is fixed by the standard)
// with explicit conversions, so datasets are bit-identical across standard
// libraries.  Gaussian variates use the Marsaglia polar method.  Scans that
// must not depend on the worker count draw candidate j from a counter-based
// splitmix64 hash of (seed, j).

#include "intnet/highprec.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace intnet {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// k-th 64-bit word of the counter stream for draw j under seed.
inline std::uint64_t counter_word(std::uint64_t seed, std::uint64_t j, std::uint64_t k)
{
    return splitmix64(splitmix64(splitmix64(seed) ^ j) + k);
}

/// Uniform integer in [-cap, cap] for draw j; rejection sampling on masked words.
inline BigInt counter_uniform_symmetric(const BigInt& cap, std::uint64_t seed, std::uint64_t j)
{
    const BigInt range = 2 * cap;  // draw u in [0, range], return u - cap
    const unsigned bits = bit_length(range);
    if (bits == 0) return 0;
    const unsigned words = (bits + 63) / 64;
    const BigInt mask = pow2(bits) - 1;
    for (std::uint64_t attempt = 0;; ++attempt) {
        BigInt u = 0;
        for (unsigned w = 0; w < words; ++w) {
            u <<= 64;
            u += counter_word(seed, j, attempt * words + w);
        }
        u &= mask;
        if (u <= range) return u - cap;
    }
}

inline std::int64_t counter_uniform_symmetric(std::int64_t cap, std::uint64_t seed, std::uint64_t j)
{
    const auto range = 2 * static_cast<std::uint64_t>(cap);
    if (range == 0) return 0;
    const unsigned bits = 64 - static_cast<unsigned>(__builtin_clzll(range));
    const std::uint64_t mask = bits == 64 ? ~0ULL : (1ULL << bits) - 1;
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t u = counter_word(seed, j, attempt) & mask;
        if (u <= range) return static_cast<std::int64_t>(u) - cap;
    }
}

/// Uniform double in [0,1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

/// Standard normal variates by the Marsaglia polar method over mt19937_64.
class PolarGaussian {
public:
    explicit PolarGaussian(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& engine() { return rng_; }

    double operator()()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01(rng_) - 1.0;
            v = 2.0 * uniform01(rng_) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace intnet
