#pragma once

// Constructive approximation of a Hölder function by a single network:
// pick M from eps, anchor each cell at its center, map f(center) to a torus
// target, and search for q hitting all targets within eps / (4K).

#include "intnet/functions.hpp"
#include "intnet/kronecker.hpp"
#include "intnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

namespace intnet {

/// M = ceil((2F/eps)^(1/beta)), exact for rational beta.
inline std::uint64_t mesh_size(const Rational& eps, const HolderSpec& spec)
{
    spec.validate();
    if (eps <= 0) throw std::invalid_argument("mesh_size: eps must be positive");
    const Rational x = 2 * spec.F / eps;
    // beta = p/r: smallest M with M^p >= x^r
    const BigInt& p = boost::multiprecision::numerator(spec.beta);
    const BigInt& r = boost::multiprecision::denominator(spec.beta);
    if (p > 100000 || r > 100000) throw std::invalid_argument("mesh_size: beta has too large a numerator/denominator");
    const BigInt m = ceil_root(rational_pow(x, r.convert_to<unsigned>()), p.convert_to<unsigned>());
    if (m > BigInt(std::uint64_t(1) << 31)) throw std::invalid_argument("mesh_size: M too large");
    return std::max<std::uint64_t>(1, m.convert_to<std::uint64_t>());
}

inline std::uint64_t cell_count(std::uint64_t M, unsigned d)
{
    std::uint64_t n = 1;
    for (unsigned k = 0; k < d; ++k) {
        if (n > (std::uint64_t(1) << 31) / (M + 1)) throw std::invalid_argument("(M+1)^d too large");
        n *= M + 1;
    }
    return n;
}

/// Centers of J_1, ..., J_N in index order.
inline std::vector<Point> cell_representatives(std::uint64_t M, unsigned d)
{
    const std::uint64_t n = cell_count(M, d);
    std::vector<Point> reps;
    reps.reserve(n);
    for (std::uint64_t i = 1; i <= n; ++i) reps.push_back(cell_of_index(GridIndex{i}, M, d).center());
    return reps;
}

/// b_i = (f(y_i) + K) / (2K); rejects |f(y_i)| >= K.
inline TargetVector targets_from_function(const TargetFunction& f, std::span<const Point> reps, const Rational& K)
{
    if (K <= 0) throw std::invalid_argument("targets_from_function: K must be positive");
    std::vector<Rational> b;
    b.reserve(reps.size());
    for (const Point& y : reps) {
        const Rational fy = rational_from_double(f(y));
        if (fy >= K || fy <= -K) {
            std::string where;
            for (double v : y) where += (where.empty() ? "" : ",") + std::to_string(v);
            throw ClassViolation("function '" + f.name + "' reaches |f| >= K at (" + where + ")");
        }
        b.push_back((fy + K) / (2 * K));
    }
    return TargetVector(std::move(b));
}

/// Axis coordinates for the sup-error grid: R uniform points plus both sides of every cell edge.
inline std::vector<double> sup_grid_axis(std::uint64_t M, unsigned R)
{
    std::vector<double> axis;
    if (R < 2) R = 2;
    for (unsigned j = 0; j < R; ++j) axis.push_back(static_cast<double>(j) / (R - 1));
    for (std::uint64_t m = 1; m <= M; ++m) {
        const double edge = static_cast<double>(m) / static_cast<double>(M);
        axis.push_back(edge);
        axis.push_back(std::nextafter(edge, 0.0));
    }
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    return axis;
}

/// max |Z(x) - f(x)| over an R^d grid augmented with cell-edge points.
inline double sup_error_grid(const NetworkParams& params, const TargetFunction& f, unsigned R)
{
    const std::vector<double> values = cell_values(params);
    const std::vector<double> axis = sup_grid_axis(params.M(), R);
    const unsigned d = params.d();
    std::vector<std::size_t> idx(d, 0);
    Point x(d);
    double worst = 0;
    for (;;) {
        for (unsigned k = 0; k < d; ++k) x[k] = axis[idx[k]];
        const double z = values[grid_index(x, params.M()).value - 1];
        worst = std::max(worst, std::abs(z - f(x)));
        unsigned k = 0;
        while (k < d && ++idx[k] == axis.size()) idx[k++] = 0;
        if (k == d) break;
    }
    return worst;
}

struct ApproximationReport {
    Rational eps;
    std::uint64_t M = 0;
    std::uint64_t N = 0;
    Rational inner_tolerance;   // eps / (4K)
    BigInt q;
    BigInt q_bound;             // ceil((N+1)^(2N+3) (8K/eps)^N)
    double sup_error_grid = 0;  // sampled estimate
    unsigned grid_resolution = 0;
    double analytic_bound = 0;  // eps/2 + F (1/(2M))^beta
    double max_anchor_error = 0;
    SearchResult search;
};

struct Approximation {
    NetworkParams params;
    ApproximationReport report;
};

struct BuildOptions {
    unsigned grid_resolution = 0;  // 0 picks 4096 / 256 / 32 / 8 for d = 1 / 2 / 3 / more
    bool verify_class = true;
};

inline unsigned default_grid_resolution(unsigned d) { return d == 1 ? 4096 : d == 2 ? 256 : d == 3 ? 32 : 8; }

inline std::variant<Approximation, NotFound> build_approximant(const TargetFunction& f, const HolderSpec& spec,
                                                               unsigned d, const Rational& eps,
                                                               SearchConfig search, BuildOptions options = {})
{
    spec.validate();
    if (eps <= 0) throw std::invalid_argument("build_approximant: eps must be positive");
    if (options.verify_class) verify_holder(f, spec, d);

    const std::uint64_t M = mesh_size(eps, spec);
    const std::uint64_t N = cell_count(M, d);
    const std::vector<Point> reps = cell_representatives(M, d);
    const TargetVector targets = targets_from_function(f, reps, spec.K);

    search.eps = eps / (4 * spec.K);
    SearchOutcome outcome = search_q(targets, search);
    if (auto* nf = std::get_if<NotFound>(&outcome)) return *nf;
    SearchResult found = std::get<SearchResult>(std::move(outcome));

    NetworkParams params(d, spec.K_d(), M, found.q);
    ApproximationReport report;
    report.eps = eps;
    report.M = M;
    report.N = N;
    report.inner_tolerance = search.eps;
    report.q = found.q;
    report.q_bound = q_bound(N, search.eps);
    report.grid_resolution = options.grid_resolution ? options.grid_resolution : default_grid_resolution(d);
    report.sup_error_grid = sup_error_grid(params, f, report.grid_resolution);
    report.analytic_bound = rational_to_double(eps) / 2 +
                            spec.F_d() * std::pow(1.0 / (2.0 * static_cast<double>(M)), spec.beta_d());
    const std::vector<double> values = cell_values(params);
    for (std::size_t i = 0; i < reps.size(); ++i)
        report.max_anchor_error = std::max(report.max_anchor_error, std::abs(values[i] - f(reps[i])));
    report.search = std::move(found);
    return Approximation{std::move(params), std::move(report)};
}

}  // namespace intnet
