#pragma once

// Machine-word fast path for frac(q * 2^(i/D)).
//
// Fractional parts of 2^(i/D) are stored floored to 126 bits.  For |q| <= 2^62
// the product q * frac mod 2^126 is one wrapping 128-bit multiply, and the
// exact fractional part lies within |q| * 2^-126 of it, the same contract as
// frac_mult_interval at B = 126.

#include "intnet/highprec.hpp"

#include <cstdint>
#include <vector>

namespace intnet {

using u128 = unsigned __int128;
using i128 = __int128;

inline constexpr unsigned kFastBits = 126;
inline constexpr u128 kFastOne = u128(1) << kFastBits;
inline constexpr u128 kFastMask = kFastOne - 1;
inline constexpr std::int64_t kFastQLimit = std::int64_t(1) << 62;

inline u128 to_u128(const BigInt& v)
{
    const BigInt lo_mask = pow2(64) - 1;
    const auto lo = BigInt(v & lo_mask).convert_to<std::uint64_t>();
    const auto hi = BigInt((v >> 64) & lo_mask).convert_to<std::uint64_t>();
    return (u128(hi) << 64) | lo;
}

inline BigInt to_big(u128 v)
{
    BigInt r = static_cast<std::uint64_t>(v >> 64);
    r <<= 64;
    r += static_cast<std::uint64_t>(v);
    return r;
}

inline bool fits_fast(std::int64_t q) { return q <= kFastQLimit && q >= -kFastQLimit; }

inline bool fits_fast(const BigInt& q) { return q <= kFastQLimit && q >= -kFastQLimit; }

/// Fractional parts of 2^(i/D), i = 1..D-1, floored to 126 bits.
class RootTable {
public:
    explicit RootTable(unsigned D) : D_(D), fracs_(D)
    {
        if (D < 2) throw std::invalid_argument("RootTable: D must be >= 2");
        const BigInt one = pow2(kFastBits);
        for (unsigned i = 1; i < D; ++i) {
            // 2^(i/D) lies in (1,2): drop the integer part
            fracs_[i] = to_u128(pow2_root(i, D, kFastBits).mantissa - one);
        }
    }

    unsigned denominator() const { return D_; }

    /// Center of the arc for frac(q * 2^(i/D)), in units of 2^-126.
    u128 center(unsigned i, std::int64_t q) const
    {
        return (static_cast<u128>(static_cast<i128>(q)) * fracs_[i]) & kFastMask;
    }

    /// Center truncated to a double in [0,1).
    static double to_unit(u128 c)
    {
        return static_cast<double>(static_cast<std::uint64_t>(c >> (kFastBits - 53))) * 0x1p-53;
    }

    double phi(unsigned i, std::int64_t q) const { return to_unit(center(i, q)); }

    u128 frac(unsigned i) const { return fracs_[i]; }

private:
    unsigned D_;
    std::vector<u128> fracs_;
};

}  // namespace intnet
