#pragma once

// Registry of target functions on [0,1]^d and the Hölder class check
//   ||f||_inf < K  and  |f(x) - f(y)| <= F |x - y|_inf^beta.

#include "intnet/network.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace intnet {

/// The target lies outside its declared Hölder class.
class ClassViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct HolderSpec {
    Rational beta = 1;
    Rational F = 1;
    Rational K = 1;

    void validate() const
    {
        if (beta <= 0 || F <= 0 || K <= 0) throw std::invalid_argument("HolderSpec: beta, F and K must be positive");
    }
    double beta_d() const { return rational_to_double(beta); }
    double F_d() const { return rational_to_double(F); }
    double K_d() const { return rational_to_double(K); }
};

using FunctionParams = std::map<std::string, double>;

struct TargetFunction {
    std::string name;
    FunctionParams params;
    std::function<double(std::span<const double>)> eval;

    double operator()(std::span<const double> x) const { return eval(x); }
};

namespace detail {

inline double param_or(const FunctionParams& p, const std::string& key, double fallback)
{
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

inline void check_keys(const std::string& name, const FunctionParams& p, std::initializer_list<const char*> allowed)
{
    for (const auto& [key, value] : p) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw std::invalid_argument("function '" + name + "' has no parameter '" + key + "'");
        if (!std::isfinite(value)) throw std::invalid_argument("function parameter '" + key + "' is not finite");
    }
}

}  // namespace detail

inline std::vector<std::string> function_names() { return {"zero", "constant", "affine", "cosine", "product"}; }

/// zero: 0
/// constant: value
/// affine: offset + slope * mean(x)
/// cosine: amp * cos(freq * sum(x) + phase)
/// product: amp * prod_k cos(freq * x_k)
inline TargetFunction make_function(const std::string& name, const FunctionParams& params = {})
{
    using detail::param_or;
    if (name == "zero") {
        detail::check_keys(name, params, {});
        return {name, params, [](std::span<const double>) { return 0.0; }};
    }
    if (name == "constant") {
        detail::check_keys(name, params, {"value"});
        const double c = param_or(params, "value", 0.0);
        return {name, params, [c](std::span<const double>) { return c; }};
    }
    if (name == "affine") {
        detail::check_keys(name, params, {"offset", "slope"});
        const double a = param_or(params, "offset", 0.0);
        const double b = param_or(params, "slope", 1.0);
        return {name, params, [a, b](std::span<const double> x) {
                    double s = 0;
                    for (double v : x) s += v;
                    return a + b * s / static_cast<double>(x.size());
                }};
    }
    if (name == "cosine") {
        detail::check_keys(name, params, {"amp", "freq", "phase"});
        const double amp = param_or(params, "amp", 0.5);
        const double freq = param_or(params, "freq", 1.0);
        const double phase = param_or(params, "phase", 0.0);
        return {name, params, [=](std::span<const double> x) {
                    double s = 0;
                    for (double v : x) s += v;
                    return amp * std::cos(freq * s + phase);
                }};
    }
    if (name == "product") {
        detail::check_keys(name, params, {"amp", "freq"});
        const double amp = param_or(params, "amp", 0.5);
        const double freq = param_or(params, "freq", 1.0);
        return {name, params, [=](std::span<const double> x) {
                    double p = amp;
                    for (double v : x) p *= std::cos(freq * v);
                    return p;
                }};
    }
    throw std::invalid_argument("unknown function '" + name + "'");
}

/// Numerical check of the declared class on a grid plus seeded random pairs.
/// Throws ClassViolation naming the first offending point.
inline void verify_holder(const TargetFunction& f, const HolderSpec& spec, unsigned d, unsigned grid_per_axis = 0)
{
    spec.validate();
    if (d < 1) throw std::invalid_argument("verify_holder: d must be >= 1");
    const double K = spec.K_d();
    const double F = spec.F_d();
    const double beta = spec.beta_d();
    if (grid_per_axis == 0) grid_per_axis = d == 1 ? 4097 : d == 2 ? 129 : d == 3 ? 33 : 9;

    auto fail = [&](const std::string& what, std::span<const double> x) {
        std::ostringstream os;
        os << "function '" << f.name << "' violates its declared class: " << what << " at x=(";
        for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
        os << ")";
        throw ClassViolation(os.str());
    };
    auto holder_ok = [&](double fx, double fy, double dist) {
        const double rhs = F * std::pow(dist, beta);
        return std::abs(fx - fy) <= rhs * (1 + 1e-12) + 1e-15;
    };

    const double h = 1.0 / (grid_per_axis - 1);
    std::vector<unsigned> idx(d, 0);
    Point x(d), y(d);
    for (;;) {
        for (unsigned k = 0; k < d; ++k) x[k] = idx[k] * h;
        const double fx = f(x);
        if (!(std::abs(fx) < K)) fail("|f(x)| >= K", x);
        // axis neighbours at scales h, 2h, 4h, ...
        for (unsigned k = 0; k < d; ++k) {
            for (unsigned step = 1; idx[k] + step < grid_per_axis; step *= 2) {
                y = x;
                y[k] = (idx[k] + step) * h;
                if (!holder_ok(fx, f(y), step * h)) fail("Hölder condition", x);
            }
        }
        unsigned k = 0;
        while (k < d && ++idx[k] == grid_per_axis) idx[k++] = 0;
        if (k == d) break;
    }

    std::mt19937_64 rng(0x5eed);
    for (int t = 0; t < 20000; ++t) {
        double dist = 0;
        for (unsigned k = 0; k < d; ++k) {
            x[k] = static_cast<double>(rng() >> 11) * 0x1p-53;
            y[k] = static_cast<double>(rng() >> 11) * 0x1p-53;
            dist = std::max(dist, std::abs(x[k] - y[k]));
        }
        const double fx = f(x);
        if (!(std::abs(fx) < K)) fail("|f(x)| >= K", x);
        if (!holder_ok(fx, f(y), dist)) fail("Hölder condition", x);
    }
}

}  // namespace intnet
