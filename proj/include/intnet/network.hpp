#pragma once

// The fixed-architecture network Z(x) = 2K * frac(q * sigma(k_M + g_M(x))) - K
// with activations {sigma, floor} and a single integer weight q.

#include "intnet/highprec.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace intnet {

using Point = std::vector<double>;

/// Network shape and weight: input dimension d, output bound K, grid resolution M, weight q.
class NetworkParams {
public:
    NetworkParams(unsigned d, double K, std::uint64_t M, BigInt q) : d_(d), K_(K), M_(M), q_(std::move(q))
    {
        if (d_ < 1) throw std::invalid_argument("NetworkParams: d must be >= 1");
        if (!(K_ > 0) || !std::isfinite(K_)) throw std::invalid_argument("NetworkParams: K must be positive");
        if (M_ < 1) throw std::invalid_argument("NetworkParams: M must be >= 1");
        // N = (M+1)^d is kept below 2^31 so k_M + N fits comfortably in 64 bits.
        std::uint64_t n = 1;
        for (unsigned k = 0; k < d_; ++k) {
            if (n > (std::uint64_t(1) << 31) / (M_ + 1))
                throw std::invalid_argument("NetworkParams: (M+1)^d too large");
            n *= M_ + 1;
        }
        N_ = n;
    }

    unsigned d() const { return d_; }
    double K() const { return K_; }
    std::uint64_t M() const { return M_; }
    const BigInt& q() const { return q_; }

    /// Number of grid cells, (M+1)^d.
    std::uint64_t N() const { return N_; }
    /// k_M = (N-1) N / 2, the offset that lands sigma on the block of 2^(i/(N+1)).
    std::uint64_t k_offset() const { return (N_ - 1) * N_ / 2; }

    NetworkParams with_q(BigInt q) const { return NetworkParams(d_, K_, M_, std::move(q)); }

private:
    unsigned d_;
    double K_;
    std::uint64_t M_;
    BigInt q_;
    std::uint64_t N_ = 1;
};

/// 1-based cell index in [1, (M+1)^d].
struct GridIndex {
    std::uint64_t value = 1;
    friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

struct TriangularBlock {
    std::uint64_t m = 0;
    std::uint64_t offset = 0;
    friend bool operator==(const TriangularBlock&, const TriangularBlock&) = default;
};

/// The unique m with (m-1)m/2 < x <= m(m+1)/2, and x's offset inside that block.
inline TriangularBlock triangular_block(std::uint64_t x)
{
    if (x == 0) throw std::invalid_argument("triangular_block: x must be >= 1");
    auto tri = [](std::uint64_t m) { return static_cast<std::uint64_t>((static_cast<unsigned __int128>(m) * (m + 1)) / 2); };
    // m ~ (sqrt(8x+1) - 1) / 2, then fix rounding
    auto m = static_cast<std::uint64_t>((std::sqrt(8.0 * static_cast<double>(x) + 1.0) - 1.0) / 2.0);
    if (m == 0) m = 1;
    while (tri(m) < x) ++m;
    while (m > 1 && tri(m - 1) >= x) --m;
    return TriangularBlock{m, x - tri(m - 1)};
}

/// sigma(x) = 2^(offset/(m+1)) for natural x, as an exact exponent offset/(m+1).
struct RootExponent {
    std::uint64_t numerator = 0;
    std::uint64_t denominator = 1;
    friend bool operator==(const RootExponent&, const RootExponent&) = default;
};

inline RootExponent sigma_exponent(std::uint64_t x)
{
    const auto [m, offset] = triangular_block(x);
    return RootExponent{offset, m + 1};
}

inline FixedPoint sigma(std::uint64_t x, unsigned B)
{
    const auto [num, den] = sigma_exponent(x);
    if (den > std::numeric_limits<unsigned>::max()) throw std::invalid_argument("sigma: argument too large");
    return pow2_root(static_cast<unsigned>(num), static_cast<unsigned>(den), B);
}

/// sigma on the reals: zero off the naturals {1, 2, ...}.
inline FixedPoint sigma(double x, unsigned B)
{
    if (std::isfinite(x) && x >= 1.0 && x < 0x1p62 && std::floor(x) == x)
        return sigma(static_cast<std::uint64_t>(x), B);
    return FixedPoint{0, B};
}

/// Exact floor(M * x) for x in [0,1].
inline std::uint64_t floor_scaled(std::uint64_t M, double x)
{
    const double m = static_cast<double>(M);
    double fl = std::floor(m * x);
    // m*x may round up across an integer; the fma residual has the exact sign.
    if (std::fma(m, x, -fl) < 0) fl -= 1.0;
    return static_cast<std::uint64_t>(fl);
}

inline void check_point(std::span<const double> x, unsigned d)
{
    if (x.size() != d) throw std::invalid_argument("point dimension does not match d");
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("point coordinate outside [0,1]");
}

/// g_M(x) = 1 + sum_k (M+1)^(k-1) floor(M x_k).
inline GridIndex grid_index(std::span<const double> x, std::uint64_t M)
{
    if (M < 1) throw std::invalid_argument("grid_index: M must be >= 1");
    check_point(x, static_cast<unsigned>(x.size()));
    std::uint64_t index = 1;
    std::uint64_t weight = 1;
    for (double v : x) {
        index += weight * floor_scaled(M, v);
        weight *= M + 1;
    }
    return GridIndex{index};
}

/// Axis-aligned cell [m/M, (m+1)/M) ∩ [0,1] per coordinate; digit M is the point {1}.
struct Cell {
    std::vector<std::uint64_t> digits;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<bool> upper_closed;

    bool contains(std::span<const double> x) const
    {
        if (x.size() != lower.size()) return false;
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[k] < lower[k]) return false;
            if (upper_closed[k] ? x[k] > upper[k] : x[k] >= upper[k]) return false;
        }
        return true;
    }

    Point center() const
    {
        Point c(lower.size());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = 0.5 * (lower[k] + upper[k]);
        return c;
    }
};

inline Cell cell_of_index(GridIndex i, std::uint64_t M, unsigned d)
{
    if (M < 1 || d < 1) throw std::invalid_argument("cell_of_index: M and d must be >= 1");
    std::uint64_t n = 1;
    for (unsigned k = 0; k < d; ++k) n *= M + 1;
    if (i.value < 1 || i.value > n) throw std::out_of_range("cell_of_index: index out of range");

    Cell cell;
    std::uint64_t rest = i.value - 1;
    const double m = static_cast<double>(M);
    for (unsigned k = 0; k < d; ++k) {
        const std::uint64_t digit = rest % (M + 1);
        rest /= M + 1;
        cell.digits.push_back(digit);
        if (digit == M) {
            cell.lower.push_back(1.0);
            cell.upper.push_back(1.0);
            cell.upper_closed.push_back(true);
        } else {
            cell.lower.push_back(static_cast<double>(digit) / m);
            cell.upper.push_back(static_cast<double>(digit + 1) / m);
            cell.upper_closed.push_back(false);
        }
    }
    return cell;
}

/// Default output tolerance is 2^-40 * 2K, i.e. arc radius <= 2^-40.
inline Rational default_output_tolerance(double K) { return rational_from_double(K) * 2 / Rational(pow2(40)); }

/// Certified arc for frac(q * sigma(k_M + i)), doubling B until radius * 2K <= tol.
inline TorusInterval cell_arc(const NetworkParams& p, GridIndex i, unsigned B,
                              const std::optional<Rational>& output_tol = std::nullopt)
{
    if (i.value < 1 || i.value > p.N()) throw std::out_of_range("cell_arc: index out of range");
    const Rational two_k = rational_from_double(p.K()) * 2;
    const Rational tol = output_tol ? *output_tol : default_output_tolerance(p.K());
    unsigned bits = B == 0 ? 1 : B;
    for (;;) {
        if (bits > precision_cap()) throw PrecisionCapExceeded("network evaluation exceeded precision cap");
        const FixedPoint alpha = sigma(p.k_offset() + i.value, bits);
        try {
            TorusInterval v = frac_mult_interval(p.q(), alpha);
            if (v.radius_value() * two_k <= tol) return v;
        } catch (const InsufficientPrecision&) {
        }
        bits *= 2;
    }
}

/// Maps a torus center c in [0,1) to the output 2Kc - K, kept inside [-K, K).
inline double output_from_unit(double c, double K)
{
    const double v = 2.0 * K * c - K;
    return v >= K ? std::nextafter(K, -K) : v;
}

inline double cell_value(const NetworkParams& p, GridIndex i, unsigned B = 64,
                         const std::optional<Rational>& output_tol = std::nullopt)
{
    return output_from_unit(cell_arc(p, i, B, output_tol).center_double(), p.K());
}

/// Analytic form: 2K frac(q sigma(k_M + g_M(x))) - K.
inline double forward(const NetworkParams& p, std::span<const double> x, unsigned B = 64,
                      const std::optional<Rational>& output_tol = std::nullopt)
{
    check_point(x, p.d());
    return cell_value(p, grid_index(x, p.M()), B, output_tol);
}

/// Layer-by-layer composition: scale by M, floor, weighted sum, shifted floor,
/// duplicate, (floor; sigma_k), diag(1, q), (sigma_k; floor), then (2Kq, -2K) and bias -K.
inline double forward_layerwise(const NetworkParams& p, std::span<const double> x, unsigned B = 64,
                                const std::optional<Rational>& output_tol = std::nullopt)
{
    check_point(x, p.d());
    const std::uint64_t M = p.M();

    // (M I_d) x, then floor coordinatewise, then the row (1, M+1, ..., (M+1)^(d-1))
    std::uint64_t t = 0;
    std::uint64_t weight = 1;
    for (double v : x) {
        t += weight * floor_scaled(M, v);
        weight *= M + 1;
    }
    // floor_1(t) = floor(t + 1); duplicate into (g, g)
    const std::uint64_t g = t + 1;
    const std::uint64_t top = g;  // floor_0 of an integer
    const std::uint64_t k = p.k_offset();

    const Rational two_k = rational_from_double(p.K()) * 2;
    const Rational tol = output_tol ? *output_tol : default_output_tolerance(p.K());
    unsigned bits = B == 0 ? 1 : B;
    for (;; bits *= 2) {
        if (bits > precision_cap()) throw PrecisionCapExceeded("layerwise evaluation exceeded precision cap");
        // second unit: sigma_k(g); diag(1, q) scales it by q
        const FixedPoint alpha = sigma(static_cast<double>(g + k), bits);
        const BigInt scaled = p.q() * alpha.mantissa;  // q * alpha in units of 2^-bits
        const BigInt radius = abs_big(p.q());
        const BigInt one = pow2(bits);
        if (Rational(radius, one) * two_k > tol) continue;

        // floor_0 of q*alpha must be the same across the whole error band
        const BigInt fl_lo = floor_div(scaled - radius, one);
        const BigInt fl_hi = floor_div(scaled + radius, one);
        if (fl_lo != fl_hi) continue;
        const BigInt floor_qa = floor_div(scaled, one);

        // first unit after diag: sigma_k(top) again; output row (2Kq, -2K)
        const FixedPoint alpha_again = sigma(static_cast<double>(top + k), bits);
        const BigInt numer = p.q() * alpha_again.mantissa - floor_qa * one;  // in [0, 2^bits)
        const TorusInterval v{numer, radius, bits, false};
        return output_from_unit(v.center_double(), p.K());
    }
}

/// The N cell outputs 2K frac(q sigma(k_M + i)) - K, i = 1..N (index 0 holds cell 1).
inline std::vector<double> cell_values(const NetworkParams& p, unsigned B = 64,
                                       const std::optional<Rational>& output_tol = std::nullopt)
{
    std::vector<double> values(p.N());
    for (std::uint64_t i = 1; i <= p.N(); ++i) values[i - 1] = cell_value(p, GridIndex{i}, B, output_tol);
    return values;
}

inline std::vector<double> forward_batch(const NetworkParams& p, std::span<const Point> xs, unsigned B = 64,
                                         const std::optional<Rational>& output_tol = std::nullopt)
{
    std::vector<double> out;
    if (xs.empty()) return out;
    const std::vector<double> values = cell_values(p, B, output_tol);
    out.reserve(xs.size());
    for (const Point& x : xs) {
        check_point(x, p.d());
        out.push_back(values[grid_index(x, p.M()).value - 1]);
    }
    return out;
}

}  // namespace intnet
