#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "twotrap/analysis.hpp"

using namespace twotrap;

namespace {

double binom_cdf(long k, long n, double p) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    double sum = 0.0;
    for (long i = 0; i <= k; ++i) {
        const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                                (i == 0 ? 0.0 : i * std::log(p)) + (n - i == 0 ? 0.0 : (n - i) * std::log1p(-p));
        sum += std::exp(log_term);
    }
    return sum;
}

// Root of a monotone function on [0, 1] by bisection.
template <class F>
double bisect(F&& f, double target, bool increasing) {
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const bool below = f(mid) < target;
        if (below == increasing) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

RateEstimate bisection_ci(long k, long n, double conf) {
    const double alpha = 1.0 - conf;
    const double tail = (k == 0 || k == n) ? alpha : alpha / 2.0;
    RateEstimate r;
    r.lower = k == 0 ? 0.0 : bisect([&](double p) { return 1.0 - binom_cdf(k - 1, n, p); }, tail, true);
    r.upper = k == n ? 1.0 : bisect([&](double p) { return binom_cdf(k, n, p); }, tail, false);
    return r;
}

TrialRecord record(bool post, bool a1, bool a2, bool same, long well_sep, bool insert_valid = true) {
    TrialRecord r;
    r.post_selected = post;
    r.alive_1 = a1;
    r.alive_2 = a2;
    r.same_well = same;
    r.insert_well_sep = well_sep;
    r.insert_valid = insert_valid;
    return r;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("p_theor frozen values") {
    CHECK(p_theor(0.70, 1.0, 1.064) == doctest::Approx(0.296055).epsilon(1e-5));
    CHECK(p_theor(0.86, 0.94, 1.064) == doctest::Approx(0.228334).epsilon(1e-5));
    CHECK(p_theor(0.863, 0.935, 1.064) == doctest::Approx(0.226355).epsilon(1e-5));
    CHECK(p_theor(1e-6, 1.0, 1.064) == doctest::Approx(1.0));
    CHECK(p_theor(1e-6, 0.5, 1.064) == doctest::Approx(0.5));
    CHECK_THROWS_AS(p_theor(0.0, 1.0, 1.064), DomainError);
    CHECK_THROWS_AS(p_theor(-1.0, 1.0, 1.064), DomainError);
    CHECK_THROWS_AS(p_theor(0.7, 1.1, 1.064), DomainError);
}

TEST_CASE("p_theor quadrature agrees with the closed form") {
    for (int i = 0; i <= 400; ++i) {
        const double width = 0.01 * std::pow(1000.0, i / 400.0);
        REQUIRE(std::abs(p_theor_quadrature(width, 0.935, 1.064) - p_theor(width, 0.935, 1.064)) <= 1e-10);
    }
}

TEST_CASE("p_theor monotonicity and bound") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> w(0.01, 5.0);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double a = w(rng);
        const double b = w(rng);
        const double q1 = p(rng);
        const double q2 = p(rng);
        REQUIRE(p_theor(a, q1, 1.064) <= q1);
        if (a < b) REQUIRE(p_theor(a, 0.9, 1.064) > p_theor(b, 0.9, 1.064));
        if (q1 < q2) REQUIRE(p_theor(0.8, q1, 1.064) < p_theor(0.8, q2, 1.064));
    }
    const auto s = p_theor_sensitivity(0.86, 0.94, 1.064, 0.11, 0.055);
    const double h = 1e-6;
    CHECK(s.d_dwidth == doctest::Approx((p_theor(0.86 + h, 0.94, 1.064) - p_theor(0.86 - h, 0.94, 1.064)) / (2 * h)).epsilon(1e-6));
    CHECK(s.d_dnoloss == doctest::Approx(p_theor(0.86, 1.0, 1.064)));
    CHECK(s.spread > 0.0);
}

TEST_CASE("error budget and deconvolution") {
    CHECK(error_budget(0.190, 0.65, 0.130) == doctest::Approx(0.715262).epsilon(1e-5));
    CHECK(error_budget(0.190, 0.82, 0.0) == doctest::Approx(0.862902).epsilon(1e-5));
    CHECK(error_budget(0.0, 0.0, 0.0) == 0.0);
    CHECK(deconvolve_width(0.71, 0.130) == doctest::Approx(0.697997).epsilon(1e-5));
    CHECK(deconvolve_width(0.5, 0.0) == 0.5);
    CHECK(deconvolve_width(0.13, 0.13) == 0.0);
    CHECK_THROWS_AS(deconvolve_width(0.1, 0.13), DomainError);
    CHECK_THROWS_AS(error_budget(-0.1, 0.0, 0.0), DomainError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng);
        const double b = u(rng);
        const double m = u(rng);
        REQUIRE(deconvolve_width(error_budget(a, b, m), m) == doctest::Approx(std::sqrt(2 * a * a + b * b)).epsilon(1e-9));
    }
}

TEST_CASE("loss algebra") {
    const auto a = loss_algebra(0.065, 0.0);
    CHECK(a.p_uncorr == 0.0);
    CHECK(a.p_noloss == doctest::Approx(0.935));
    CHECK(loss_algebra(0.0, 0.0).p_noloss == 1.0);
    CHECK(loss_algebra(1.0, 1.0).p_uncorr == 1.0);
    CHECK(loss_algebra(1.0, 1.0).p_noloss == 0.0);
    CHECK_THROWS_AS(loss_algebra(-0.1, 0.0), DomainError);
}

TEST_CASE("histograms") {
    DistanceSample empty;
    const auto h0 = build_histogram(empty, 1.064);
    CHECK(h0.total() == 0);
    for (auto c : h0.counts) CHECK(c == 0);

    DistanceSample one{{15.27}, DistanceSample::Label::final};
    const auto h1 = build_histogram(one, kCoarseBin);
    REQUIRE(h1.counts.size() == 15);
    CHECK(h1.counts[14] == 1);
    CHECK(h1.total() == 1);

    DistanceSample edge{{0.0, 1.064, 2.0, -0.5}, DistanceSample::Label::initial};
    const auto h2 = build_histogram(edge, 1.0);
    CHECK(h2.counts[0] == 1);
    CHECK(h2.counts[1] == 1);
    CHECK(h2.counts[2] == 1);
    CHECK(h2.underflow == 1);
    CHECK(h2.total() == 4);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(15.0, 0.7);
    DistanceSample many;
    for (int i = 0; i < 190; ++i) many.values.push_back(g(rng));
    CHECK(build_histogram(many, kFineBin).total() == 190);
    CHECK(build_histogram(many, kFineBin, 13.0).total() == 190);
    CHECK_THROWS_AS(build_histogram(many, 0.0), DomainError);
}

TEST_CASE("distance csv") {
    const auto s = parse_distance_csv("# distances\n15.27\n\n14.9 # inline\n  16.0,\n");
    REQUIRE(s.values.size() == 3);
    CHECK(s.values[0] == 15.27);
    CHECK(s.values[2] == 16.0);
    CHECK(parse_distance_csv("").values.empty());
    CHECK_THROWS_AS(parse_distance_csv("1.0\nabc\n"), DomainError);
    CHECK_THROWS_AS(parse_distance_csv("-1.0\n"), DomainError);
    try {
        parse_distance_csv("1\n2\nx\n");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("binomial intervals") {
    const auto zero = binomial_ci(0, 10);
    CHECK(zero.lower == 0.0);
    CHECK(zero.point == 0.0);
    CHECK(zero.upper == doctest::Approx(1.0 - std::pow(1.0 - 0.6827, 0.1)).epsilon(1e-9));
    CHECK(zero.upper == doctest::Approx(0.108447).epsilon(1e-5));
    CHECK(binomial_ci(10, 10, 0.95).upper == 1.0);
    const auto half = binomial_ci(5, 10);
    CHECK(half.lower == doctest::Approx(1.0 - half.upper).epsilon(1e-10));
    CHECK(half.lower == doctest::Approx(0.304815).epsilon(1e-5));
    const auto p16 = binomial_ci(16, 100);
    CHECK(p16.lower == doctest::Approx(0.122311).epsilon(1e-5));
    CHECK(p16.upper == doctest::Approx(0.205366).epsilon(1e-5));

    for (long n : {1L, 7L, 50L, 100L}) {
        for (long k = 0; k <= n; ++k) {
            const auto r = binomial_ci(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n));
            const auto o = bisection_ci(k, n, 0.6827);
            REQUIRE(r.lower == doctest::Approx(o.lower).epsilon(1e-8));
            REQUIRE(r.upper == doctest::Approx(o.upper).epsilon(1e-8));
            REQUIRE(r.lower <= r.point);
            REQUIRE(r.point <= r.upper);
        }
    }
    CHECK_THROWS_AS(binomial_ci(3, 2), DomainError);
    CHECK_THROWS_AS(binomial_ci(0, 0), DomainError);
}

TEST_CASE("binomial interval coverage") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> up(0.0, 1.0);
    int covered = 0;
    constexpr int cases = 10000;
    for (int i = 0; i < cases; ++i) {
        const double p = up(rng);
        std::binomial_distribution<int> draw(50, p);
        const auto r = binomial_ci(static_cast<std::uint64_t>(draw(rng)), 50);
        covered += (r.lower <= p && p <= r.upper) ? 1 : 0;
    }
    CHECK(covered / static_cast<double>(cases) >= 0.6827 - 0.02);
}

TEST_CASE("success rates") {
    std::vector<TrialRecord> recs{
        record(true, true, true, true, 0),   record(true, true, true, false, 1),
        record(true, false, false, false, 0), record(false, true, true, true, 0),
        record(true, true, true, false, 28), record(true, true, true, false, 27),
    };
    const auto same = success_rate(recs, SuccessCriterion::same_well);
    CHECK(same.n == 5);
    CHECK(same.k == 1);
    CHECK(success_rate(recs, SuccessCriterion::pair_lost).k == 1);
    CHECK(success_rate(recs, SuccessCriterion::pair_intact).k == 4);
    // 15 um / 0.532 um = 28.2 wells -> 28.
    CHECK(success_rate(recs, SuccessCriterion::target_well, 15.0).k == 1);
    CHECK(success_rate(recs, SuccessCriterion::within_one_well_of_target, 15.0).k == 2);
    CHECK(success_rate(recs, SuccessCriterion::target_well, 0.0).k == 1);

    std::vector<TrialRecord> none{record(false, true, true, true, 0)};
    CHECK_THROWS_AS(success_rate(none, SuccessCriterion::same_well), DomainError);
    CHECK_THROWS_AS(success_rate(std::vector<TrialRecord>{}, SuccessCriterion::same_well), DomainError);
}

TEST_CASE("sample stats") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto s = sample_stats(v);
    CHECK(s.n == 4);
    CHECK(s.mean == 2.5);
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(std::isnan(sample_stats(std::vector<double>{}).mean));
}

}
