#pragma once

// Effective Kronecker search: find an integer q with
//   max_i |frac(q * 2^(i/(N+1))) - b_i| <= eps
// within |q| <= (N+1)^(2N+3) (2/eps)^N, using certified interval decisions.

#include "intnet/highprec.hpp"
#include "intnet/parallel.hpp"
#include "intnet/random.hpp"
#include "intnet/root_table.hpp"

#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace intnet {

/// Torus points b in [0,1)^N.
class TargetVector {
public:
    TargetVector() = default;
    explicit TargetVector(std::vector<Rational> b) : b_(std::move(b))
    {
        if (b_.empty()) throw std::invalid_argument("TargetVector: N must be >= 1");
        for (const Rational& v : b_)
            if (v < 0 || v >= 1) throw std::invalid_argument("TargetVector: every b_i must lie in [0,1)");
    }

    std::size_t size() const { return b_.size(); }
    const Rational& operator[](std::size_t i) const { return b_[i]; }
    const std::vector<Rational>& values() const { return b_; }

private:
    std::vector<Rational> b_;
};

enum class Strategy { exhaustive, random };

inline const char* to_string(Strategy s) { return s == Strategy::exhaustive ? "exhaustive" : "random"; }

inline Strategy parse_strategy(const std::string& s)
{
    if (s == "exhaustive") return Strategy::exhaustive;
    if (s == "random") return Strategy::random;
    throw std::invalid_argument("unknown strategy '" + s + "' (expected exhaustive or random)");
}

struct SearchConfig {
    Rational eps{1, 10};
    BigInt q_cap = 1;
    Strategy strategy = Strategy::exhaustive;
    std::uint64_t seed = 0;
    std::uint64_t sample_budget = 0;
    unsigned workers = 1;

    void validate() const
    {
        if (eps <= 0) throw std::invalid_argument("SearchConfig: eps must be positive");
        if (q_cap < 1) throw std::invalid_argument("SearchConfig: q_cap must be >= 1");
        if (strategy == Strategy::random && sample_budget == 0)
            throw std::invalid_argument("SearchConfig: random strategy needs sample_budget >= 1");
    }
};

struct SearchResult {
    BigInt q;
    Rational discrepancy_upper;
    BigInt scanned;  // candidates examined (exhaustive: canonical rank of q plus one)
    unsigned precision_bits = 0;
    Strategy strategy = Strategy::exhaustive;
    BigInt q_cap;
};

/// Certificate that no candidate in the scanned set meets eps.
struct NotFound {
    Strategy strategy = Strategy::exhaustive;
    BigInt scanned;
    BigInt max_magnitude;  // exhaustive: every q in [-max_magnitude, max_magnitude] was rejected
    BigInt q_cap;
    Rational eps;
};

using SearchOutcome = std::variant<SearchResult, NotFound>;

/// ceil((N+1)^(2N+3) (2/eps)^N), exact.
inline BigInt q_bound(std::uint64_t N, const Rational& eps)
{
    if (N < 1) throw std::invalid_argument("q_bound: N must be >= 1");
    if (eps <= 0) throw std::invalid_argument("q_bound: eps must be positive");
    if (N > 1'000'000) throw std::invalid_argument("q_bound: N too large");
    const auto n = static_cast<unsigned>(N);
    const Rational value = Rational(boost::multiprecision::pow(BigInt(n + 1), 2 * n + 3)) * rational_pow(2 / eps, n);
    return ceil_rational(value);
}

struct DiscrepancyBounds {
    Rational lower;
    Rational upper;
};

/// Certified bounds on max_i |phi(q 2^(i/(N+1))) - b_i| at a fixed precision B.
class BigEvaluator {
public:
    BigEvaluator(const TargetVector& targets, unsigned B) : B_(B), one_(pow2(B))
    {
        const auto D = static_cast<unsigned>(targets.size() + 1);
        for (unsigned i = 1; i < D; ++i) {
            alphas_.push_back(pow2_root(i, D, B));
            b_lo_.push_back(dyadic_floor(targets[i - 1], B));
            b_hi_.push_back(dyadic_ceil(targets[i - 1], B));
        }
    }

    unsigned bits() const { return B_; }

    /// Max-enclosure in units of 2^-B; throws InsufficientPrecision when |q| is too large for B.
    Bracket<BigInt> bounds(const BigInt& q) const
    {
        Bracket<BigInt> out{0, 0};
        for (std::size_t k = 0; k < alphas_.size(); ++k) {
            const TorusInterval v = frac_mult_interval(q, alphas_[k]);
            const Bracket<BigInt> br = abs_diff_bounds<BigInt>(v.center, v.radius, one_, b_lo_[k], b_hi_[k]);
            if (k == 0 || br.lo > out.lo) out.lo = br.lo;
            if (k == 0 || br.hi > out.hi) out.hi = br.hi;
        }
        return out;
    }

    DiscrepancyBounds rational_bounds(const BigInt& q) const
    {
        const Bracket<BigInt> br = bounds(q);
        return {Rational(br.lo, one_), Rational(br.hi, one_)};
    }

private:
    unsigned B_;
    BigInt one_;
    std::vector<FixedPoint> alphas_;
    std::vector<BigInt> b_lo_;
    std::vector<BigInt> b_hi_;
};

inline Rational max_target(const TargetVector& targets)
{
    Rational m = 0;
    for (const Rational& b : targets.values()) m = b > m ? b : m;
    return m;
}

inline DiscrepancyBounds discrepancy(const BigInt& q, const TargetVector& targets, unsigned B)
{
    if (q == 0) {
        // phi(0) = 0 exactly, so the discrepancy is max_i b_i
        const Rational m = max_target(targets);
        return {m, m};
    }
    return BigEvaluator(targets, B).rational_bounds(q);
}

enum class Verdict { accept, reject, ambiguous };

struct Decision {
    bool accepted = false;
    Rational upper;  // certified upper bound on the discrepancy (meaningful when accepted)
    unsigned bits = 0;
};

/// Accept/reject decisions for candidates against fixed targets and eps.
class Certifier {
public:
    Certifier(TargetVector targets, Rational eps, unsigned start_bits)
        : targets_(std::move(targets)), eps_(std::move(eps)), start_bits_(std::max(1u, start_bits)),
          table_(static_cast<unsigned>(targets_.size() + 1))
    {
        const BigInt one = pow2(kFastBits);
        for (const Rational& b : targets_.values()) {
            b_lo_.push_back(static_cast<i128>(to_u128(dyadic_floor(b, kFastBits))));
            b_hi_.push_back(static_cast<i128>(to_u128(dyadic_ceil(b, kFastBits))));
        }
        // discrepancies never exceed 1, so clamp eps there to stay inside 128 bits
        BigInt lo = dyadic_floor(eps_, kFastBits);
        BigInt hi = dyadic_ceil(eps_, kFastBits);
        eps_lo_ = static_cast<i128>(to_u128(lo > one ? one : lo));
        eps_hi_ = static_cast<i128>(to_u128(hi > one ? one : hi));
        use_fast_ = start_bits_ <= kFastBits;
        if (!use_fast_) base_.emplace(targets_, start_bits_);
    }

    const TargetVector& targets() const { return targets_; }
    const Rational& eps() const { return eps_; }

    /// 126-bit decision; `upper` receives the max upper bound in units of 2^-126.
    Verdict fast(std::int64_t q, i128& upper) const
    {
        const i128 one = static_cast<i128>(kFastOne);
        const i128 radius = q < 0 ? -static_cast<i128>(q) : static_cast<i128>(q);
        bool ambiguous = false;
        upper = 0;
        for (std::size_t k = 0; k < b_lo_.size(); ++k) {
            const auto c = static_cast<i128>(table_.center(static_cast<unsigned>(k + 1), q));
            const Bracket<i128> br = abs_diff_bounds<i128>(c, radius, one, b_lo_[k], b_hi_[k]);
            if (br.lo > eps_hi_) return Verdict::reject;
            if (br.hi > eps_lo_) ambiguous = true;
            if (br.hi > upper) upper = br.hi;
        }
        return ambiguous ? Verdict::ambiguous : Verdict::accept;
    }

    /// Big-integer decision, doubling precision from `bits` until decided.
    Decision escalate(const BigInt& q, unsigned bits) const
    {
        for (bits = std::max(bits, 1u); bits <= precision_cap(); bits *= 2) {
            std::optional<BigEvaluator> local;
            const BigEvaluator* ev = nullptr;
            if (base_ && base_->bits() == bits) {
                ev = &*base_;
            } else {
                local.emplace(targets_, bits);
                ev = &*local;
            }
            try {
                const DiscrepancyBounds d = ev->rational_bounds(q);
                if (d.upper <= eps_) return Decision{true, d.upper, bits};
                if (d.lower > eps_) return Decision{false, d.upper, bits};
            } catch (const InsufficientPrecision&) {
            }
        }
        throw PrecisionCapExceeded("kronecker: candidate undecided at the precision cap");
    }

    Decision decide(const BigInt& q) const
    {
        if (q == 0) {
            const Rational m = max_target(targets_);
            return Decision{m <= eps_, m, 0};
        }
        if (use_fast_ && fits_fast(q)) {
            i128 upper = 0;
            const Verdict v = fast(q.convert_to<std::int64_t>(), upper);
            if (v == Verdict::accept)
                return Decision{true, Rational(to_big(static_cast<u128>(upper)), pow2(kFastBits)), kFastBits};
            if (v == Verdict::reject) return Decision{false, 0, kFastBits};
            return escalate(q, std::max(2 * kFastBits, start_bits_));
        }
        return escalate(q, start_bits_);
    }

    Decision decide(std::int64_t q) const
    {
        if (q != 0 && use_fast_ && fits_fast(q)) {
            i128 upper = 0;
            const Verdict v = fast(q, upper);
            if (v == Verdict::reject) return Decision{false, 0, kFastBits};
            if (v == Verdict::accept)
                return Decision{true, Rational(to_big(static_cast<u128>(upper)), pow2(kFastBits)), kFastBits};
        }
        return decide(BigInt(q));
    }

private:
    TargetVector targets_;
    Rational eps_;
    unsigned start_bits_;
    RootTable table_;
    std::vector<i128> b_lo_;
    std::vector<i128> b_hi_;
    i128 eps_lo_ = 0;
    i128 eps_hi_ = 0;
    bool use_fast_ = true;
    std::optional<BigEvaluator> base_;
};

/// Initial precision: enough bits that the arc radius stays below eps/8 over the whole cap.
inline unsigned start_precision(const BigInt& q_cap, const Rational& eps)
{
    return required_bits(q_cap, (eps < 1 ? eps : Rational(1)) / 8);
}

namespace detail {

inline constexpr std::uint64_t kScanChunk = 4096;

inline SearchOutcome search_exhaustive(const Certifier& cert, const SearchConfig& cfg)
{
    const BigInt cap_limit = BigInt(kFastQLimit);
    const auto max_mag = (cfg.q_cap < cap_limit ? cfg.q_cap : cap_limit).convert_to<std::uint64_t>();
    const std::uint64_t n_chunks = max_mag / kScanChunk + 1;

    std::atomic<std::uint64_t> best_rank{std::numeric_limits<std::uint64_t>::max()};
    std::mutex mutex;
    std::optional<Decision> best;

    auto first_rank = [](std::uint64_t chunk) {
        const std::uint64_t m = chunk * kScanChunk;
        return m == 0 ? 0 : 2 * m - 1;
    };

    claim_chunks(
        n_chunks, cfg.workers,
        [&](std::uint64_t chunk) {
            const std::uint64_t lo = chunk * kScanChunk;
            const std::uint64_t hi = std::min(max_mag, lo + kScanChunk - 1);
            for (std::uint64_t m = lo; m <= hi; ++m) {
                for (int sign : {1, -1}) {
                    if (m == 0 && sign < 0) continue;
                    const std::int64_t q = sign * static_cast<std::int64_t>(m);
                    const std::uint64_t rank = canonical_rank(q);
                    if (rank >= best_rank.load()) return;
                    Decision d = cert.decide(q);
                    if (!d.accepted) continue;
                    std::lock_guard lock(mutex);
                    if (rank < best_rank.load()) {
                        best_rank = rank;
                        best = std::move(d);
                    }
                    return;
                }
            }
        },
        [&](std::uint64_t chunk) { return first_rank(chunk) < best_rank.load(); });

    if (best) {
        const std::uint64_t rank = best_rank.load();
        return SearchResult{BigInt(canonical_value(rank)), best->upper, BigInt(rank) + 1, best->bits,
                            Strategy::exhaustive, cfg.q_cap};
    }
    return NotFound{Strategy::exhaustive, 2 * BigInt(max_mag) + 1, BigInt(max_mag), cfg.q_cap, cfg.eps};
}

inline SearchOutcome search_random(const Certifier& cert, const SearchConfig& cfg)
{
    constexpr std::uint64_t kDrawChunk = 1024;
    const std::uint64_t n_chunks = (cfg.sample_budget + kDrawChunk - 1) / kDrawChunk;
    const bool small_cap = cfg.q_cap <= BigInt(kFastQLimit);
    const std::int64_t cap64 = small_cap ? cfg.q_cap.convert_to<std::int64_t>() : 0;

    std::mutex mutex;
    std::optional<std::pair<BigInt, Decision>> best;  // (q, decision)

    claim_chunks(n_chunks, cfg.workers, [&](std::uint64_t chunk) {
        std::optional<std::pair<BigInt, Decision>> local;
        auto consider = [&](BigInt q, Decision d) {
            if (!d.accepted) return;
            if (!local || d.upper < local->second.upper ||
                (d.upper == local->second.upper && canonical_rank(q) < canonical_rank(local->first)))
                local.emplace(std::move(q), std::move(d));
        };
        const std::uint64_t lo = chunk * kDrawChunk;
        const std::uint64_t hi = std::min(cfg.sample_budget, lo + kDrawChunk);
        for (std::uint64_t j = lo; j < hi; ++j) {
            if (small_cap) {
                const std::int64_t q = counter_uniform_symmetric(cap64, cfg.seed, j);
                consider(BigInt(q), cert.decide(q));
            } else {
                BigInt q = counter_uniform_symmetric(cfg.q_cap, cfg.seed, j);
                Decision d = cert.decide(q);
                consider(std::move(q), std::move(d));
            }
        }
        if (!local) return;
        std::lock_guard lock(mutex);
        if (!best || local->second.upper < best->second.upper ||
            (local->second.upper == best->second.upper &&
             canonical_rank(local->first) < canonical_rank(best->first)))
            best = std::move(local);
    });

    if (best)
        return SearchResult{best->first, best->second.upper, BigInt(cfg.sample_budget), best->second.bits,
                            Strategy::random, cfg.q_cap};
    return NotFound{Strategy::random, BigInt(cfg.sample_budget), cfg.q_cap, cfg.q_cap, cfg.eps};
}

}  // namespace detail

/// Exhaustive: first q in 0, +1, -1, +2, ... with certified discrepancy <= eps.
/// Random: best certified hit among sample_budget uniform draws from [-q_cap, q_cap].
inline SearchOutcome search_q(const TargetVector& targets, const SearchConfig& config)
{
    config.validate();
    const Certifier cert(targets, config.eps, start_precision(config.q_cap, config.eps));
    return config.strategy == Strategy::exhaustive ? detail::search_exhaustive(cert, config)
                                                   : detail::search_random(cert, config);
}

/// Reference oracle: scans every q in [-q_bound, q_bound] with the big-integer path
/// and returns the smallest |q| whose certified discrepancy is <= eps.
inline std::optional<BigInt> min_q_oracle(const TargetVector& targets, const Rational& eps,
                                          const BigInt& scan_limit = BigInt(1) << 24)
{
    const BigInt bound = q_bound(targets.size(), eps);
    if (bound > scan_limit) throw std::invalid_argument("min_q_oracle: q_bound too large to scan");
    const auto Q = bound.convert_to<std::int64_t>();

    const unsigned B = start_precision(bound, eps);
    const BigEvaluator ev(targets, B);
    const BigInt one = pow2(B);
    const BigInt eps_lo = dyadic_floor(eps, B);
    const BigInt eps_hi = dyadic_ceil(eps, B);
    const Rational m0 = max_target(targets);

    std::optional<BigInt> best;
    auto consider = [&](std::int64_t q, bool hit) {
        if (!hit) return;
        const BigInt mag = q < 0 ? BigInt(-q) : BigInt(q);
        if (!best || mag < *best) best = mag;
    };
    for (std::int64_t q = -Q; q <= Q; ++q) {
        if (q == 0) {
            consider(0, m0 <= eps);
            continue;
        }
        const Bracket<BigInt> br = ev.bounds(BigInt(q));
        if (br.hi <= eps_lo) {
            consider(q, true);
        } else if (br.lo > eps_hi) {
            consider(q, false);
        } else {
            // straddles eps at this precision
            bool hit = false;
            for (unsigned bits = 2 * B;; bits *= 2) {
                if (bits > precision_cap()) throw PrecisionCapExceeded("min_q_oracle: undecided at cap");
                const DiscrepancyBounds d = BigEvaluator(targets, bits).rational_bounds(BigInt(q));
                if (d.upper <= eps) {
                    hit = true;
                    break;
                }
                if (d.lower > eps) break;
            }
            consider(q, hit);
        }
    }
    return best;
}

}  // namespace intnet
