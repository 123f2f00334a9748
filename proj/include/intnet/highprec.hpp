#pragma once

// Certified fixed-point arithmetic for fractional parts of q * 2^(i/D).
//
// Every real quantity here is a dyadic rational: a big integer numerator over
// 2^B.  Roots are floored, so the sign of every rounding error is known and an
// interval on the torus [0,1) can be built that provably contains the exact
// fractional part.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace intnet {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Default highest precision (fractional bits) any escalation loop may reach.
inline constexpr unsigned kPrecisionCap = 4096;

inline std::atomic<unsigned>& precision_cap_setting()
{
    static std::atomic<unsigned> cap{kPrecisionCap};
    return cap;
}

/// Current escalation cap; process-wide, set once by front ends.
inline unsigned precision_cap() { return precision_cap_setting().load(std::memory_order_relaxed); }

inline void set_precision_cap(unsigned bits)
{
    if (bits < 1) throw std::invalid_argument("precision cap must be >= 1");
    precision_cap_setting().store(bits, std::memory_order_relaxed);
}

/// Raised when |q| * 2^-B >= 1/2; the caller should retry with more bits.
class InsufficientPrecision : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when escalation would exceed precision_cap().
class PrecisionCapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline BigInt pow2(unsigned e)
{
    BigInt r = 1;
    r <<= e;
    return r;
}

inline unsigned bit_length(const BigInt& a)
{
    return a == 0 ? 0u : static_cast<unsigned>(boost::multiprecision::msb(a)) + 1u;
}

inline BigInt abs_big(const BigInt& a) { return a < 0 ? BigInt(-a) : a; }

/// floor(a^(1/D)) by integer Newton iteration from above.
inline BigInt nth_root_floor(const BigInt& a, unsigned D)
{
    if (a < 0) throw std::invalid_argument("nth_root_floor: negative radicand");
    if (D == 0) throw std::invalid_argument("nth_root_floor: D must be >= 1");
    if (D == 1 || a < 2) return a;

    // Newton decreases monotonically from any start >= the root and stops at the floor.
    // Seed from a double estimate inflated by 2^-30; fall back to 2^ceil(bits/D).
    const unsigned bits = bit_length(a);
    BigInt x;
    {
        const unsigned drop = bits > 64 ? bits - 64 : 0;
        const double top = static_cast<double>(BigInt(a >> drop).convert_to<std::uint64_t>());
        const double e = (std::log2(top) + drop) / D;
        const double ei = std::floor(e);
        const double mant = std::ceil(std::exp2(e - ei) * 0x1p52 * (1 + 0x1p-30));
        const long shift = static_cast<long>(ei) - 52;
        x = BigInt(static_cast<std::uint64_t>(mant));
        x = shift >= 0 ? BigInt(x << shift) : BigInt((x >> -shift) + 1);
        if (boost::multiprecision::pow(x, D) < a) x = pow2((bits + D - 1) / D);
    }
    for (;;) {
        BigInt y = (BigInt(D - 1) * x + a / boost::multiprecision::pow(x, D - 1)) / D;
        if (y >= x) return x;
        x = std::move(y);
    }
}

inline BigInt floor_div(const BigInt& a, const BigInt& b)
{
    BigInt q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline BigInt floor_rational(const Rational& x)
{
    return floor_div(boost::multiprecision::numerator(x), boost::multiprecision::denominator(x));
}

inline BigInt ceil_rational(const Rational& x) { return -floor_rational(-x); }

/// floor(x * 2^B)
inline BigInt dyadic_floor(const Rational& x, unsigned B)
{
    return floor_div(boost::multiprecision::numerator(x) << B, boost::multiprecision::denominator(x));
}

/// ceil(x * 2^B)
inline BigInt dyadic_ceil(const Rational& x, unsigned B) { return -dyadic_floor(-x, B); }

/// Smallest Q >= 0 with Q^t >= x, for x >= 0.
inline BigInt ceil_root(const Rational& x, unsigned t)
{
    if (x < 0) throw std::invalid_argument("ceil_root: negative argument");
    if (t == 0) throw std::invalid_argument("ceil_root: t must be >= 1");
    BigInt r = nth_root_floor(floor_rational(x), t);
    if (Rational(boost::multiprecision::pow(r, t)) >= x) return r;
    return r + 1;
}

inline Rational rational_pow(const Rational& x, unsigned e)
{
    return Rational(boost::multiprecision::pow(boost::multiprecision::numerator(x), e),
                    boost::multiprecision::pow(boost::multiprecision::denominator(x), e));
}

/// Exact value of a finite double.
inline Rational rational_from_double(double v)
{
    if (!std::isfinite(v)) throw std::invalid_argument("rational_from_double: non-finite value");
    if (v == 0.0) return Rational(0);
    int exp = 0;
    const double frac = std::frexp(v, &exp);  // v = frac * 2^exp, |frac| in [0.5, 1)
    const auto mant = static_cast<std::int64_t>(std::ldexp(frac, 53));
    const int shift = exp - 53;
    BigInt num = mant;
    if (shift >= 0) return Rational(num << shift);
    return Rational(num, pow2(static_cast<unsigned>(-shift)));
}

inline double rational_to_double(const Rational& x) { return x.convert_to<double>(); }

/// Parses "3", "-0.25", "1e-3", "2.5E+2" or "3/4" into an exact rational.
inline Rational parse_rational(std::string_view text)
{
    auto fail = [&] { return std::invalid_argument("not a decimal number: '" + std::string(text) + "'"); };
    if (text.empty()) throw fail();

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational num = parse_rational(text.substr(0, slash));
        Rational den = parse_rational(text.substr(slash + 1));
        if (den == 0) throw fail();
        return num / den;
    }

    std::size_t pos = 0;
    bool negative = false;
    if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';

    BigInt digits = 0;
    long long scale = 0;
    bool any_digit = false;
    bool after_point = false;
    for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (c >= '0' && c <= '9') {
            digits = digits * 10 + (c - '0');
            any_digit = true;
            if (after_point) --scale;
        } else if (c == '.' && !after_point) {
            after_point = true;
        } else {
            break;
        }
    }
    if (!any_digit) throw fail();

    if (pos < text.size()) {
        if (text[pos] != 'e' && text[pos] != 'E') throw fail();
        ++pos;
        bool exp_negative = false;
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) exp_negative = text[pos++] == '-';
        if (pos >= text.size()) throw fail();
        long long e = 0;
        for (; pos < text.size(); ++pos) {
            const char c = text[pos];
            if (c < '0' || c > '9' || e > 100000) throw fail();
            e = e * 10 + (c - '0');
        }
        scale += exp_negative ? -e : e;
    }

    Rational value(digits);
    const BigInt ten_pow = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
    value = scale < 0 ? value / Rational(ten_pow) : value * Rational(ten_pow);
    return negative ? Rational(-value) : value;
}

/// mantissa / 2^frac_bits, approximating its target from below.
struct FixedPoint {
    BigInt mantissa = 0;
    unsigned frac_bits = 0;

    Rational value() const { return Rational(mantissa, pow2(frac_bits)); }
    double to_double() const { return rational_to_double(value()); }
    friend bool operator==(const FixedPoint&, const FixedPoint&) = default;
};

/// 2^(i/D) floored to B fractional bits; requires 1 <= i < D.
inline FixedPoint pow2_root(unsigned i, unsigned D, unsigned B)
{
    if (i == 0 || i >= D)
        throw std::invalid_argument("pow2_root: exponent numerator must satisfy 1 <= i < D");
    // 2^(i/D) * 2^B = (2^(i + D*B))^(1/D)
    return FixedPoint{nth_root_floor(pow2(i + D * B), D), B};
}

/// Smallest B >= 0 with q_max * 2^-B <= target_radius.
inline unsigned required_bits(const BigInt& q_max, const Rational& target_radius)
{
    if (q_max < 1) throw std::invalid_argument("required_bits: q_max must be >= 1");
    if (target_radius <= 0) throw std::invalid_argument("required_bits: radius must be positive");
    // q_max * den <= num * 2^B
    const BigInt lhs = q_max * boost::multiprecision::denominator(target_radius);
    const BigInt& num = boost::multiprecision::numerator(target_radius);
    const unsigned lb = bit_length(lhs);
    const unsigned nb = bit_length(num);
    unsigned B = lb > nb + 1 ? lb - nb - 1 : 0;
    while ((num << B) < lhs) ++B;
    return B;
}

/// An arc of the torus [0,1) in units of 2^-frac_bits: [center - radius, center + radius] mod 1.
struct TorusInterval {
    BigInt center = 0;  // in [0, 2^frac_bits)
    BigInt radius = 0;  // < 2^(frac_bits - 1)
    unsigned frac_bits = 0;
    bool wraps = false;  // the arc crosses the 0/1 seam

    Rational center_value() const { return Rational(center, pow2(frac_bits)); }
    Rational radius_value() const { return Rational(radius, pow2(frac_bits)); }

    /// Center truncated to 53 bits; always < 1.
    double center_double() const
    {
        BigInt top = frac_bits >= 53 ? BigInt(center >> (frac_bits - 53)) : BigInt(center << (53 - frac_bits));
        return std::ldexp(static_cast<double>(top.convert_to<std::uint64_t>()), -53);
    }

    /// True if the point num / 2^bits (taken mod 1) lies on the arc.
    bool contains(const BigInt& num, unsigned bits) const
    {
        const unsigned common = std::max(bits, frac_bits);
        const BigInt one = pow2(common);
        BigInt p = num << (common - bits);
        p %= one;
        if (p < 0) p += one;
        const BigInt c = center << (common - frac_bits);
        const BigInt r = radius << (common - frac_bits);
        BigInt diff = p - c;
        if (diff < 0) diff = -diff;
        const BigInt torus_dist = diff * 2 > one ? BigInt(one - diff) : diff;
        return torus_dist <= r;
    }

    bool contains(const Rational& x) const
    {
        // x is dyadic when it comes from this module; otherwise test its floor/ceil brackets.
        const unsigned bits = frac_bits + 64;
        const BigInt lo = dyadic_floor(x, bits);
        const BigInt hi = dyadic_ceil(x, bits);
        return contains(lo, bits) && contains(hi, bits);
    }
};

/// Certified enclosure of frac(q * alpha_exact) given alpha = pow2_root(...).
inline TorusInterval frac_mult_interval(const BigInt& q, const FixedPoint& alpha)
{
    const unsigned B = alpha.frac_bits;
    const BigInt one = pow2(B);
    const BigInt r = abs_big(q);
    if (r * 2 >= one && r != 0)
        throw InsufficientPrecision("frac_mult_interval: |q| * 2^-B >= 1/2, raise precision");

    // alpha_exact = alpha + e, e in [0, 2^-B), so q*alpha_exact is within |q|*2^-B of q*alpha.
    BigInt c = (q * alpha.mantissa) % one;
    if (c < 0) c += one;
    const bool wraps = c < r || c + r >= one;
    return TorusInterval{std::move(c), r, B, wraps};
}

/// Bounds on |phi - b| for phi on the arc (center, radius) and b in [b_lo, b_hi],
/// everything in the same fixed-point units with `one` representing 1.
/// Works for BigInt and __int128 alike.
template <class Int>
struct Bracket {
    Int lo;
    Int hi;
};

template <class Int>
Bracket<Int> abs_diff_bounds(const Int& center, const Int& radius, const Int& one, const Int& b_lo,
                             const Int& b_hi)
{
    const Int zero = 0;
    bool first = true;
    Bracket<Int> out{zero, zero};
    auto piece = [&](const Int& a, const Int& e) {
        // sup over [a,e]x[b_lo,b_hi] of |phi-b|, inf likewise
        Int up = e - b_lo;
        if (b_hi - a > up) up = b_hi - a;
        Int low = zero;
        if (a - b_hi > low) low = a - b_hi;
        if (b_lo - e > low) low = b_lo - e;
        if (first) {
            out = {low, up};
            first = false;
        } else {
            if (low < out.lo) out.lo = low;
            if (up > out.hi) out.hi = up;
        }
    };
    const Int lo = center - radius;
    const Int hi = center + radius;
    if (lo < zero) {
        piece(zero, hi);
        piece(lo + one, one);
    } else if (hi >= one) {
        piece(lo, one);
        piece(zero, hi - one);
    } else {
        piece(lo, hi);
    }
    return out;
}

}  // namespace intnet
