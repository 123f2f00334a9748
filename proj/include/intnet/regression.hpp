#pragma once

// Nonparametric regression with the one-parameter network class
// {Z_{K,M,q} : |q| <= Q}: data generation, ERM via per-cell sufficient
// statistics, prediction error, the oracle-inequality bound and rate studies.

#include "intnet/approximator.hpp"
#include "intnet/functions.hpp"
#include "intnet/kronecker.hpp"
#include "intnet/network.hpp"
#include "intnet/parallel.hpp"
#include "intnet/random.hpp"
#include "intnet/root_table.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace intnet {

struct Sample {
    Point x;
    double y = 0;
};

/// X ~ Uniform[0,1]^d, Y = f0(X) + standard normal noise; seeded mt19937_64 + polar method.
inline std::vector<Sample> generate_data(const TargetFunction& f0, unsigned d, std::uint64_t n, std::uint64_t seed)
{
    if (d < 1) throw std::invalid_argument("generate_data: d must be >= 1");
    std::vector<Sample> data;
    data.reserve(n);
    PolarGaussian noise(seed);
    for (std::uint64_t s = 0; s < n; ++s) {
        Sample sample;
        sample.x.resize(d);
        for (unsigned k = 0; k < d; ++k) sample.x[k] = uniform01(noise.engine());
        sample.y = f0(sample.x) + noise();
        data.push_back(std::move(sample));
    }
    return data;
}

/// Per-cell count, sum of Y and sum of Y^2.
struct CellStats {
    std::uint64_t M = 1;
    unsigned d = 1;
    std::vector<std::uint64_t> count;
    std::vector<double> sum;
    std::vector<double> sumsq;

    std::uint64_t N() const { return count.size(); }
    std::uint64_t n() const
    {
        std::uint64_t total = 0;
        for (auto c : count) total += c;
        return total;
    }
};

inline CellStats cell_statistics(std::span<const Sample> data, std::uint64_t M, unsigned d)
{
    const std::uint64_t n_cells = cell_count(M, d);
    CellStats st{M, d, std::vector<std::uint64_t>(n_cells, 0), std::vector<double>(n_cells, 0.0),
                 std::vector<double>(n_cells, 0.0)};
    for (const Sample& s : data) {
        check_point(s.x, d);
        const std::uint64_t i = grid_index(s.x, M).value - 1;
        st.count[i] += 1;
        st.sum[i] += s.y;
        st.sumsq[i] += s.y * s.y;
    }
    return st;
}

/// sum_i (c2_i - 2 v_i s_i + n_i v_i^2) for cell outputs v.
inline double risk_from_values(const CellStats& stats, std::span<const double> values)
{
    double risk = 0;
    for (std::size_t i = 0; i < stats.count.size(); ++i) {
        if (stats.count[i] == 0) continue;
        const double v = values[i];
        risk += stats.sumsq[i] - 2.0 * v * stats.sum[i] + static_cast<double>(stats.count[i]) * v * v;
    }
    return risk;
}

/// Sum of squared residuals of Z_{K,M,q} on the data summarised by stats.
inline double empirical_risk(const BigInt& q, const CellStats& stats, double K, unsigned B = 64)
{
    const NetworkParams p(stats.d, K, stats.M, q);
    return risk_from_values(stats, cell_values(p, B));
}

struct ERMConfig {
    std::uint64_t M = 1;
    BigInt q_cap = 1;
    Strategy strategy = Strategy::exhaustive;
    std::uint64_t seed = 0;
    std::uint64_t sample_budget = 0;
    unsigned workers = 1;

    void validate() const
    {
        if (M < 1) throw std::invalid_argument("ERMConfig: M must be >= 1");
        if (q_cap < 1) throw std::invalid_argument("ERMConfig: q_cap must be >= 1");
        if (strategy == Strategy::random && sample_budget == 0)
            throw std::invalid_argument("ERMConfig: random strategy needs sample_budget >= 1");
    }
};

struct FitResult {
    BigInt q_hat;
    double risk = 0;
    BigInt scanned;
    std::uint64_t M = 0;
    std::uint64_t N = 0;
};

namespace detail {

/// Risk of one candidate through the 126-bit table.
class FastRisk {
public:
    FastRisk(const CellStats& stats, double K) : K_(K), table_(static_cast<unsigned>(stats.N() + 1))
    {
        for (std::size_t i = 0; i < stats.count.size(); ++i) {
            if (stats.count[i] == 0) continue;
            cells_.push_back(static_cast<unsigned>(i + 1));
            n_.push_back(static_cast<double>(stats.count[i]));
            s_.push_back(stats.sum[i]);
            c2_ += stats.sumsq[i];
        }
        // the table path is exact to 2^-64 for |q| <= 2^62, far inside the 2^-40 output tolerance
    }

    double operator()(std::int64_t q) const
    {
        double risk = c2_;
        for (std::size_t k = 0; k < cells_.size(); ++k) {
            const double v = output_from_unit(table_.phi(cells_[k], q), K_);
            risk += n_[k] * v * v - 2.0 * v * s_[k];
        }
        return risk;
    }

private:
    double K_;
    RootTable table_;
    std::vector<unsigned> cells_;
    std::vector<double> n_;
    std::vector<double> s_;
    double c2_ = 0;
};

struct Best {
    double risk = std::numeric_limits<double>::infinity();
    BigInt rank = -1;
    BigInt q = 0;

    bool improves_on(const Best& other) const
    {
        if (other.rank < 0) return rank >= 0;
        return risk < other.risk || (risk == other.risk && rank < other.rank);
    }
};

}  // namespace detail

/// Minimises the empirical risk over the scanned candidates; ties go to the
/// canonical order 0, +1, -1, +2, ...
inline FitResult erm_fit(const CellStats& stats, double K, const ERMConfig& cfg)
{
    cfg.validate();
    if (stats.M != cfg.M) throw std::invalid_argument("erm_fit: statistics were binned with a different M");
    const detail::FastRisk fast(stats, K);

    std::mutex mutex;
    detail::Best best;
    auto merge = [&](const detail::Best& local) {
        std::lock_guard lock(mutex);
        if (local.improves_on(best)) best = local;
    };

    BigInt scanned;
    if (cfg.strategy == Strategy::exhaustive) {
        const BigInt limit = BigInt(kFastQLimit);
        const auto max_mag = (cfg.q_cap < limit ? cfg.q_cap : limit).convert_to<std::uint64_t>();
        constexpr std::uint64_t kChunk = 4096;
        claim_chunks(max_mag / kChunk + 1, cfg.workers, [&](std::uint64_t chunk) {
            const std::uint64_t lo = chunk * kChunk;
            const std::uint64_t hi = std::min(max_mag, lo + kChunk - 1);
            double best_risk = std::numeric_limits<double>::infinity();
            std::int64_t best_q = 0;
            for (std::uint64_t m = lo; m <= hi; ++m) {
                const auto q = static_cast<std::int64_t>(m);
                const double rp = fast(q);
                if (rp < best_risk) {
                    best_risk = rp;
                    best_q = q;
                }
                if (m == 0) continue;
                const double rn = fast(-q);
                if (rn < best_risk) {
                    best_risk = rn;
                    best_q = -q;
                }
            }
            merge(detail::Best{best_risk, BigInt(canonical_rank(best_q)), BigInt(best_q)});
        });
        scanned = 2 * BigInt(max_mag) + 1;
    } else {
        constexpr std::uint64_t kChunk = 1024;
        const bool small_cap = cfg.q_cap <= BigInt(kFastQLimit);
        const std::int64_t cap64 = small_cap ? cfg.q_cap.convert_to<std::int64_t>() : 0;
        claim_chunks((cfg.sample_budget + kChunk - 1) / kChunk, cfg.workers, [&](std::uint64_t chunk) {
            detail::Best local;
            const std::uint64_t lo = chunk * kChunk;
            const std::uint64_t hi = std::min(cfg.sample_budget, lo + kChunk);
            for (std::uint64_t j = lo; j < hi; ++j) {
                detail::Best cand;
                if (small_cap) {
                    const std::int64_t q = counter_uniform_symmetric(cap64, cfg.seed, j);
                    cand = {fast(q), BigInt(canonical_rank(q)), BigInt(q)};
                } else {
                    BigInt q = counter_uniform_symmetric(cfg.q_cap, cfg.seed, j);
                    const double r = fits_fast(q) ? fast(q.convert_to<std::int64_t>()) : empirical_risk(q, stats, K);
                    cand = {r, canonical_rank(q), q};
                }
                if (cand.improves_on(local)) local = std::move(cand);
            }
            merge(local);
        });
        scanned = cfg.sample_budget;
    }
    return FitResult{best.q, best.risk, scanned, stats.M, stats.N()};
}

inline FitResult erm_fit(std::span<const Sample> data, unsigned d, double K, const ERMConfig& cfg)
{
    return erm_fit(cell_statistics(data, cfg.M, d), K, cfg);
}

struct Schedule {
    std::uint64_t M = 0;
    std::uint64_t N = 0;
    BigInt Q;
    std::size_t Q_digits = 0;
};

inline std::size_t decimal_digits(const BigInt& v) { return abs_big(v).str().size(); }

/// M_n = ceil((2F)^(1/beta) n^(1/(2beta+d))),
/// Q_n = ceil((N_n+1)^(2N_n+3) (8K n^(beta/(2beta+d)))^N_n), both exact for rational beta.
inline Schedule schedule(std::uint64_t n, const HolderSpec& spec, unsigned d)
{
    spec.validate();
    if (n < 1) throw std::invalid_argument("schedule: n must be >= 1");
    if (d < 1) throw std::invalid_argument("schedule: d must be >= 1");
    const BigInt& bp = boost::multiprecision::numerator(spec.beta);
    const BigInt& br = boost::multiprecision::denominator(spec.beta);
    if (bp > 1000 || br > 1000) throw std::invalid_argument("schedule: beta numerator/denominator too large");
    const auto p = bp.convert_to<unsigned>();
    const auto r = br.convert_to<unsigned>();
    const unsigned u = 2 * p + d * r;  // 2beta + d = u / r

    // M^(p*u) >= (2F)^(r*u) * n^(r*p)
    const Rational rhs_m = rational_pow(2 * spec.F, r * u) * Rational(boost::multiprecision::pow(BigInt(n), r * p));
    const BigInt M_big = std::max(BigInt(1), ceil_root(rhs_m, p * u));
    if (M_big > BigInt(std::uint64_t(1) << 31)) throw std::invalid_argument("schedule: M_n too large");
    Schedule s;
    s.M = M_big.convert_to<std::uint64_t>();
    s.N = cell_count(s.M, d);
    if (s.N > 4096) throw std::invalid_argument("schedule: N_n too large to evaluate Q_n");

    // Q^u >= A^u n^(p N) with A = (N+1)^(2N+3) (8K)^N
    const auto N = static_cast<unsigned>(s.N);
    const Rational A = Rational(boost::multiprecision::pow(BigInt(N + 1), 2 * N + 3)) * rational_pow(8 * spec.K, N);
    const Rational rhs_q = rational_pow(A, u) * Rational(boost::multiprecision::pow(BigInt(n), p * N));
    s.Q = ceil_root(rhs_q, u);
    s.Q_digits = decimal_digits(s.Q);
    return s;
}

struct ErrorEstimate {
    double mean = 0;
    double std_error = 0;
};

/// Monte-Carlo E[(Z(X) - f0(X))^2] over n_mc fresh uniform X.
inline ErrorEstimate prediction_error_mc(const NetworkParams& params, const TargetFunction& f0, std::uint64_t n_mc,
                                         std::uint64_t seed)
{
    if (n_mc < 1) throw std::invalid_argument("prediction_error_mc: n_mc must be >= 1");
    const std::vector<double> values = cell_values(params);
    std::mt19937_64 rng(seed);
    Point x(params.d());
    double sum = 0, sumsq = 0;
    for (std::uint64_t s = 0; s < n_mc; ++s) {
        for (double& v : x) v = uniform01(rng);
        const double e = values[grid_index(x, params.M()).value - 1] - f0(x);
        sum += e * e;
        sumsq += e * e * e * e;
    }
    const double n = static_cast<double>(n_mc);
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1)) : 0.0;
    return {mean, std::sqrt(var / n)};
}

/// Same expectation by tensor Gauss-Legendre quadrature (10 nodes per axis) on each cell.
inline double prediction_error_quadrature(const NetworkParams& params, const TargetFunction& f0)
{
    using Gauss = boost::math::quadrature::gauss<double, 10>;
    const std::vector<double> values = cell_values(params);
    const unsigned d = params.d();
    const double M = static_cast<double>(params.M());
    double total = 0;
    for (std::uint64_t i = 1; i <= params.N(); ++i) {
        const Cell cell = cell_of_index(GridIndex{i}, params.M(), d);
        bool degenerate = false;
        for (auto digit : cell.digits) degenerate = degenerate || digit == params.M();
        if (degenerate) continue;  // measure zero
        const double v = values[i - 1];
        Point x(d);
        std::function<double(unsigned)> integrate = [&](unsigned k) -> double {
            if (k == d) {
                const double e = v - f0(x);
                return e * e;
            }
            return Gauss::integrate(
                [&, k](double t) {
                    x[k] = t;
                    return integrate(k + 1);
                },
                static_cast<double>(cell.digits[k]) / M, static_cast<double>(cell.digits[k] + 1) / M);
        };
        total += integrate(0);
    }
    return total;
}

/// log2 of a positive big integer, accurate to ~1e-15.
inline double log2_big(const BigInt& x)
{
    if (x <= 0) throw std::invalid_argument("log2_big: argument must be positive");
    const unsigned bits = bit_length(x);
    if (bits <= 64) return std::log2(static_cast<double>(x.convert_to<std::uint64_t>()));
    const auto top = BigInt(x >> (bits - 64)).convert_to<std::uint64_t>();
    return std::log2(static_cast<double>(top)) + static_cast<double>(bits - 64);
}

/// 4 [a + K^2 (18 L + 72) / n + 32 delta K]
template <class Real>
Real risk_bound_closed_form(const Real& delta, std::uint64_t n, const Real& log2_cover, const Real& approx_err_sq,
                            const Real& K)
{
    return 4 * (approx_err_sq + K * K * (18 * log2_cover + 72) / Real(n) + 32 * delta * K);
}

struct RiskBound {
    double log2_cover = 0;  // log2(2Q + 1)
    double value = 0;
};

inline RiskBound risk_bound(double delta, std::uint64_t n, const BigInt& Q, double approx_err_sq, double K)
{
    if (!(delta > 0 && delta <= 1)) throw std::invalid_argument("risk_bound: delta must lie in (0,1]");
    if (n < 1 || Q < 0 || approx_err_sq < 0 || !(K > 0)) throw std::invalid_argument("risk_bound: invalid input");
    const double L = log2_big(2 * Q + 1);
    return {L, risk_bound_closed_form<double>(delta, n, L, approx_err_sq, K)};
}

struct RateStudyConfig {
    TargetFunction f0;
    HolderSpec spec;
    unsigned d = 1;
    std::vector<std::uint64_t> n_list;
    std::vector<std::uint64_t> seeds;
    std::vector<BigInt> caps;  // one per n, or a single cap for all
    Strategy strategy = Strategy::exhaustive;
    std::uint64_t sample_budget = 0;
    std::uint64_t n_mc = 100000;
    unsigned workers = 1;
    bool verify_class = true;
};

struct RateRun {
    std::uint64_t seed = 0;
    BigInt q_hat;
    double empirical_risk = 0;  // mean squared residual on the training sample
    double prediction_error = 0;
    double prediction_se = 0;
    std::string error;  // non-empty when the run failed
};

struct RateRow {
    std::uint64_t n = 0;
    Schedule schedule;
    BigInt q_cap;
    std::vector<RateRun> runs;
    double mean_prediction_error = 0;
    double sd_prediction_error = 0;
    double risk_bound = 0;
    double log2_cover = 0;
    double delta = 0;
};

struct RateReport {
    std::vector<RateRow> rows;
    double theoretical_exponent = 0;
    std::optional<double> fitted_slope;
};

/// Least-squares slope of log(y) against log(x).
inline std::optional<double> loglog_slope(std::span<const double> xs, std::span<const double> ys)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        if (xs[i] > 0 && ys[i] > 0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    if (lx.size() < 2) return std::nullopt;
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0) return std::nullopt;
    return sxy / sxx;
}

/// Per-(n, seed) stream seeds, so every run is reproducible in isolation.
inline std::uint64_t data_seed(std::uint64_t seed, std::uint64_t n) { return splitmix64(seed * 0x100000001b3ULL ^ n); }
inline std::uint64_t mc_seed(std::uint64_t seed, std::uint64_t n) { return splitmix64(data_seed(seed, n) + 1); }

inline RateReport rate_study(const RateStudyConfig& cfg)
{
    cfg.spec.validate();
    if (cfg.n_list.empty()) throw std::invalid_argument("rate_study: n_list is empty");
    if (cfg.seeds.empty()) throw std::invalid_argument("rate_study: seeds is empty");
    if (cfg.caps.size() != 1 && cfg.caps.size() != cfg.n_list.size())
        throw std::invalid_argument("rate_study: caps must have one entry or one per n");
    if (cfg.verify_class) verify_holder(cfg.f0, cfg.spec, cfg.d);

    const double beta = cfg.spec.beta_d();
    const double K = cfg.spec.K_d();
    RateReport report;
    report.theoretical_exponent = -2 * beta / (2 * beta + cfg.d);

    std::vector<double> ns, errs;
    for (std::size_t t = 0; t < cfg.n_list.size(); ++t) {
        RateRow row;
        row.n = cfg.n_list[t];
        row.schedule = schedule(row.n, cfg.spec, cfg.d);
        row.q_cap = cfg.caps.size() == 1 ? cfg.caps[0] : cfg.caps[t];

        std::vector<double> preds;
        for (std::uint64_t seed : cfg.seeds) {
            RateRun run;
            run.seed = seed;
            try {
                const auto data = generate_data(cfg.f0, cfg.d, row.n, data_seed(seed, row.n));
                ERMConfig erm{row.schedule.M, row.q_cap, cfg.strategy, seed, cfg.sample_budget, cfg.workers};
                const FitResult fit = erm_fit(data, cfg.d, K, erm);
                run.q_hat = fit.q_hat;
                run.empirical_risk = fit.risk / static_cast<double>(row.n);
                const NetworkParams params(cfg.d, K, row.schedule.M, fit.q_hat);
                const ErrorEstimate e = prediction_error_mc(params, cfg.f0, cfg.n_mc, mc_seed(seed, row.n));
                run.prediction_error = e.mean;
                run.prediction_se = e.std_error;
                preds.push_back(e.mean);
            } catch (const std::exception& ex) {
                run.error = ex.what();
            }
            row.runs.push_back(std::move(run));
        }

        if (!preds.empty()) {
            double mean = 0;
            for (double v : preds) mean += v;
            mean /= static_cast<double>(preds.size());
            double var = 0;
            for (double v : preds) var += (v - mean) * (v - mean);
            row.mean_prediction_error = mean;
            row.sd_prediction_error = preds.size() > 1 ? std::sqrt(var / static_cast<double>(preds.size() - 1)) : 0.0;
            ns.push_back(static_cast<double>(row.n));
            errs.push_back(mean);
        }

        // oracle-inequality bound with delta = 1/n and the approximation term at eps = n^(-beta/(2beta+d))
        row.delta = 1.0 / static_cast<double>(row.n);
        const double approx = std::pow(static_cast<double>(row.n), report.theoretical_exponent);
        const RiskBound rb = risk_bound(row.delta, row.n, row.schedule.Q, approx, K);
        row.risk_bound = rb.value;
        row.log2_cover = rb.log2_cover;
        report.rows.push_back(std::move(row));
    }
    report.fitted_slope = loglog_slope(ns, errs);
    return report;
}

}  // namespace intnet
