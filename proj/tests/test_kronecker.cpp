#include "intnet/kronecker.hpp"

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <random>

using namespace intnet;
using Float = boost::multiprecision::cpp_bin_float_100;

namespace {

TargetVector targets_of(std::initializer_list<const char*> values)
{
    std::vector<Rational> b;
    for (const char* v : values) b.push_back(parse_rational(v));
    return TargetVector(std::move(b));
}

TargetVector random_targets(std::mt19937_64& rng, std::size_t N)
{
    std::vector<Rational> b;
    for (std::size_t i = 0; i < N; ++i) b.emplace_back(rng() % 1000, 1000);
    return TargetVector(std::move(b));
}

/// Plain-absolute discrepancy in 100-digit floating point.
double reference_discrepancy(std::int64_t q, const TargetVector& t)
{
    Float worst = 0;
    const auto N = static_cast<unsigned>(t.size());
    for (unsigned i = 1; i <= N; ++i) {
        const Float x = Float(q) * boost::multiprecision::pow(Float(2), Float(i) / Float(N + 1));
        const Float frac = x - boost::multiprecision::floor(x);
        const Float b = Float(boost::multiprecision::numerator(t[i - 1])) / Float(boost::multiprecision::denominator(t[i - 1]));
        worst = std::max(worst, Float(boost::multiprecision::abs(frac - b)));
    }
    return static_cast<double>(worst);
}

SearchConfig exhaustive(const Rational& eps, const BigInt& cap, unsigned workers = 1)
{
    SearchConfig cfg;
    cfg.eps = eps;
    cfg.q_cap = cap;
    cfg.workers = workers;
    return cfg;
}

}  // namespace

TEST(TargetVector, Validation)
{
    EXPECT_THROW(TargetVector(std::vector<Rational>{}), std::invalid_argument);
    EXPECT_THROW(targets_of({"1"}), std::invalid_argument);
    EXPECT_THROW(targets_of({"-0.1"}), std::invalid_argument);
    EXPECT_NO_THROW(targets_of({"0", "0.999"}));
}

TEST(QBound, Examples)
{
    EXPECT_EQ(q_bound(1, Rational(1, 4)), 256);
    EXPECT_EQ(q_bound(2, Rational(1, 2)), 34992);
    EXPECT_EQ(q_bound(1, Rational(2)), 32);
    // (2/0.3) is not an integer: ceil(3^7 * (20/3)^2) = ceil(97200)
    EXPECT_EQ(q_bound(2, parse_rational("0.3")), 97200);
    EXPECT_EQ(q_bound(1, parse_rational("0.3")), 214);
    EXPECT_THROW(q_bound(0, Rational(1, 2)), std::invalid_argument);
    EXPECT_THROW(q_bound(1, Rational(0)), std::invalid_argument);
}

TEST(Discrepancy, Examples)
{
    const DiscrepancyBounds zero = discrepancy(0, targets_of({"0.5"}), 64);
    EXPECT_EQ(zero.lower, Rational(1, 2));
    EXPECT_EQ(zero.upper, Rational(1, 2));

    const DiscrepancyBounds one = discrepancy(1, targets_of({"0.5"}), 64);
    const Rational ref1 = parse_rational("0.085786437626904951");
    EXPECT_LE(one.lower, ref1 + Rational(1, BigInt("1000000000000000000")));
    EXPECT_GE(one.upper, ref1 - Rational(1, BigInt("1000000000000000000")));
    EXPECT_LE(one.upper - one.lower, Rational(4, pow2(64)));

    const DiscrepancyBounds six = discrepancy(6, targets_of({"0.5", "0.5"}), 64);
    EXPECT_NEAR(rational_to_double(six.upper), 0.05952629936923899, 1e-15);
}

TEST(Discrepancy, SmallMultipliersAgainstHalf)
{
    const double expected[] = {0.5,                 0.24007895010512684, 0.32519789606360105,
                               0.27976314968461949, 0.46031580042050734, 0.43700525984099737};
    const TargetVector t = targets_of({"0.5", "0.5"});
    for (int q = -5; q <= 5; ++q) {
        const DiscrepancyBounds d = discrepancy(q, t, 80);
        EXPECT_NEAR(rational_to_double(d.upper), expected[std::abs(q)], 1e-15) << q;
        EXPECT_GT(d.lower, Rational(1, 5)) << q;
    }
}

TEST(Discrepancy, MatchesReference)
{
    std::mt19937_64 rng(41);
    for (int t = 0; t < 200; ++t) {
        const TargetVector targets = random_targets(rng, 1 + rng() % 4);
        const std::int64_t q = static_cast<std::int64_t>(rng() % 2000001) - 1000000;
        const DiscrepancyBounds d = discrepancy(q, targets, 96);
        const double ref = reference_discrepancy(q, targets);
        EXPECT_LE(rational_to_double(d.lower), ref + 1e-15);
        EXPECT_GE(rational_to_double(d.upper), ref - 1e-15);
    }
}

TEST(SearchQ, Examples)
{
    const auto r1 = search_q(targets_of({"0.5"}), exhaustive(Rational(1, 10), 256));
    ASSERT_TRUE(std::holds_alternative<SearchResult>(r1));
    EXPECT_EQ(std::get<SearchResult>(r1).q, 1);
    EXPECT_NEAR(rational_to_double(std::get<SearchResult>(r1).discrepancy_upper), 0.085786437626904951, 1e-15);
    EXPECT_EQ(std::get<SearchResult>(r1).scanned, 2);

    const auto r2 = search_q(targets_of({"0.5", "0.5"}), exhaustive(Rational(1, 5), 34992));
    ASSERT_TRUE(std::holds_alternative<SearchResult>(r2));
    EXPECT_EQ(std::get<SearchResult>(r2).q, 6);
    EXPECT_EQ(std::get<SearchResult>(r2).scanned, 12);

    const auto r3 = search_q(targets_of({"0.3", "0.9", "0.7"}), exhaustive(Rational(1), 100));
    EXPECT_EQ(std::get<SearchResult>(r3).q, 0);

    const auto r4 = search_q(targets_of({"0"}), exhaustive(Rational(1, 100), 256));
    EXPECT_EQ(std::get<SearchResult>(r4).q, 0);
}

TEST(SearchQ, NotFoundCertificate)
{
    const auto r = search_q(targets_of({"0.5", "0.5"}), exhaustive(Rational(1, 5), 5));
    ASSERT_TRUE(std::holds_alternative<NotFound>(r));
    const NotFound& nf = std::get<NotFound>(r);
    EXPECT_EQ(nf.max_magnitude, 5);
    EXPECT_EQ(nf.scanned, 11);
    EXPECT_EQ(nf.q_cap, 5);
    EXPECT_EQ(nf.eps, Rational(1, 5));
}

TEST(SearchQ, ConfigValidation)
{
    const TargetVector t = targets_of({"0.5"});
    EXPECT_THROW(search_q(t, exhaustive(Rational(0), 10)), std::invalid_argument);
    EXPECT_THROW(search_q(t, exhaustive(Rational(1, 2), 0)), std::invalid_argument);
    SearchConfig cfg = exhaustive(Rational(1, 2), 10);
    cfg.strategy = Strategy::random;
    EXPECT_THROW(search_q(t, cfg), std::invalid_argument);
    EXPECT_THROW(parse_strategy("greedy"), std::invalid_argument);
}

TEST(MinQOracle, Examples)
{
    EXPECT_EQ(min_q_oracle(targets_of({"0.5"}), Rational(1, 10)), BigInt(1));
    EXPECT_EQ(min_q_oracle(targets_of({"0.5", "0.5"}), Rational(1, 5)), BigInt(6));
    EXPECT_EQ(min_q_oracle(targets_of({"0"}), Rational(1, 100)), BigInt(0));
}

TEST(MinQOracle, WithinCorollaryBound)
{
    std::mt19937_64 rng(43);
    for (const Rational& eps : {Rational(1, 4), Rational(1, 2)}) {
        for (int t = 0; t < 100; ++t) {
            const TargetVector targets = random_targets(rng, 1);
            const auto q = min_q_oracle(targets, eps);
            ASSERT_TRUE(q.has_value());
            EXPECT_LE(*q, q_bound(1, eps));
        }
    }
    for (int t = 0; t < 6; ++t) {
        const TargetVector targets = random_targets(rng, 2);
        const auto q = min_q_oracle(targets, Rational(1, 2));
        ASSERT_TRUE(q.has_value());
        EXPECT_LE(*q, q_bound(2, Rational(1, 2)));
    }
}

TEST(MinQOracle, MonotoneInEps)
{
    std::mt19937_64 rng(47);
    for (int t = 0; t < 40; ++t) {
        const TargetVector targets = random_targets(rng, 1);
        const auto tight = min_q_oracle(targets, Rational(1, 8), BigInt(1) << 20);
        const auto loose = min_q_oracle(targets, Rational(1, 4));
        ASSERT_TRUE(tight && loose);
        EXPECT_LE(*loose, *tight);
    }
}

TEST(SearchQ, MatchesOracleAndIsSound)
{
    std::mt19937_64 rng(53);
    for (int t = 0; t < 30; ++t) {
        const std::size_t N = 1 + rng() % 2;
        const TargetVector targets = random_targets(rng, N);
        const Rational eps = N == 1 ? Rational(1, 8) : Rational(1, 2);
        const BigInt cap = q_bound(N, eps);
        const auto outcome = search_q(targets, exhaustive(eps, cap));
        ASSERT_TRUE(std::holds_alternative<SearchResult>(outcome));
        const SearchResult& r = std::get<SearchResult>(outcome);
        EXPECT_EQ(abs_big(r.q), *min_q_oracle(targets, eps, BigInt(1) << 22));
        EXPECT_LE(r.discrepancy_upper, eps);
        EXPECT_LE(abs_big(r.q), cap);
        // recheck at a higher precision
        EXPECT_LE(discrepancy(r.q, targets, 256).upper, eps);
        EXPECT_LE(reference_discrepancy(r.q.convert_to<std::int64_t>(), targets), rational_to_double(eps));
    }
}

TEST(SearchQ, ParallelDeterminism)
{
    std::mt19937_64 rng(59);
    for (int t = 0; t < 10; ++t) {
        const TargetVector targets = random_targets(rng, 3);
        const Rational eps(1, 10);
        std::optional<BigInt> first;
        for (unsigned workers : {1u, 2u, 4u, 8u}) {
            const auto outcome = search_q(targets, exhaustive(eps, 2000000, workers));
            ASSERT_TRUE(std::holds_alternative<SearchResult>(outcome));
            const BigInt q = std::get<SearchResult>(outcome).q;
            if (!first) first = q;
            EXPECT_EQ(q, *first) << "workers=" << workers;
        }
    }
}

TEST(SearchQ, HugeCapUsesBigIntegerPath)
{
    const TargetVector targets = targets_of({"0.5", "0.5"});
    const auto outcome = search_q(targets, exhaustive(Rational(1, 5), BigInt("10000000000000000000000000000000000000000")));
    ASSERT_TRUE(std::holds_alternative<SearchResult>(outcome));
    const SearchResult& r = std::get<SearchResult>(outcome);
    EXPECT_EQ(r.q, 6);
    EXPECT_GT(r.precision_bits, kFastBits);
}

TEST(SearchQ, RandomStrategy)
{
    std::mt19937_64 rng(61);
    const TargetVector targets = random_targets(rng, 3);
    SearchConfig cfg = exhaustive(Rational(1, 5), 1000000);
    cfg.strategy = Strategy::random;
    cfg.sample_budget = 20000;
    cfg.seed = 99;
    std::optional<BigInt> first;
    for (unsigned workers : {1u, 3u, 8u}) {
        cfg.workers = workers;
        const auto outcome = search_q(targets, cfg);
        ASSERT_TRUE(std::holds_alternative<SearchResult>(outcome));
        const SearchResult& r = std::get<SearchResult>(outcome);
        EXPECT_LE(r.discrepancy_upper, cfg.eps);
        EXPECT_LE(abs_big(r.q), cfg.q_cap);
        EXPECT_EQ(r.strategy, Strategy::random);
        if (!first) first = r.q;
        EXPECT_EQ(r.q, *first);
    }

    cfg.eps = Rational(1, 1000000);
    cfg.sample_budget = 100;
    const auto miss = search_q(targets, cfg);
    ASSERT_TRUE(std::holds_alternative<NotFound>(miss));
    EXPECT_EQ(std::get<NotFound>(miss).scanned, 100);
}

TEST(SearchQ, RandomStrategyWithBigCap)
{
    SearchConfig cfg = exhaustive(Rational(1, 2), BigInt("100000000000000000000000"));
    cfg.strategy = Strategy::random;
    cfg.sample_budget = 500;
    const auto outcome = search_q(targets_of({"0.25", "0.75"}), cfg);
    ASSERT_TRUE(std::holds_alternative<SearchResult>(outcome));
    const SearchResult& r = std::get<SearchResult>(outcome);
    EXPECT_LE(abs_big(r.q), cfg.q_cap);
    EXPECT_LE(discrepancy(r.q, targets_of({"0.25", "0.75"}), 512).upper, cfg.eps);
}

TEST(CanonicalOrder, RankRoundTrip)
{
    EXPECT_EQ(canonical_rank(std::int64_t(0)), 0u);
    EXPECT_EQ(canonical_rank(std::int64_t(1)), 1u);
    EXPECT_EQ(canonical_rank(std::int64_t(-1)), 2u);
    EXPECT_EQ(canonical_rank(std::int64_t(2)), 3u);
    for (std::uint64_t r = 0; r < 1000; ++r) EXPECT_EQ(canonical_rank(canonical_value(r)), r);
}
