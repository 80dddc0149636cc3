#include <catch2/catch_amalgamated.hpp>

#include "minkgs/errors.hpp"
#include "minkgs/nonlinearity.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace minkgs;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("eval_f on the power family", "[nonlinearity]") {
    const auto nl = Nonlinearity::power(1.0, 3.0);
    CHECK(eval_f(nl, 1.0) == 0.0);
    CHECK_THAT(eval_f(nl, 1.5), WithinAbs(-1.5 + 1.5 * 1.5 * 1.5, 1e-15));
    CHECK_THAT(eval_f(nl, 1.5), WithinAbs(1.875, 1e-15));
}

TEST_CASE("f vanishes on the negative half line", "[nonlinearity]") {
    for (const auto& nl : {Nonlinearity::power(2.0, 4.0), Nonlinearity::sine(1.0), Nonlinearity::sine(2.5)}) {
        CHECK(eval_f(nl, -0.5) == 0.0);
        CHECK(eval_F(nl, -0.5) == 0.0);
        CHECK(eval_f(nl, 0.0) == 0.0);
    }
}

TEST_CASE("non-finite arguments are rejected", "[nonlinearity]") {
    const auto nl = Nonlinearity::power(1.0, 3.0);
    CHECK_THROWS_AS(eval_f(nl, std::numeric_limits<double>::quiet_NaN()), PreconditionError);
    CHECK_THROWS_AS(eval_F(nl, std::numeric_limits<double>::infinity()), PreconditionError);
}

TEST_CASE("eval_F examples", "[nonlinearity]") {
    const auto power = Nonlinearity::power(1.0, 3.0);
    CHECK(eval_F(power, 0.0) == 0.0);
    CHECK_THAT(eval_F(power, 2.0), WithinAbs(oracle::power_F(1.0, 3.0, 2.0), 1e-14));
    CHECK_THAT(eval_F(power, 2.0), WithinAbs(2.0, 1e-14));

    const auto sine = Nonlinearity::sine(1.0);
    const double pi = std::numbers::pi;
    CHECK_THAT(eval_F(sine, pi), WithinAbs(oracle::sine1_F(pi), 1e-12));
    CHECK_THAT(eval_F(sine, pi), WithinAbs(-pi, 1e-12));
    CHECK_THAT(sine.F_by_quadrature(pi), WithinAbs(-pi, 1e-12));
}

TEST_CASE("closed primitives agree with quadrature", "[nonlinearity]") {
    // Absolute 1e-10 is below one ulp once |F| passes ~4e5 (power family near
    // s = 50), so the bound is applied relative to max(1, |F|).
    std::mt19937_64 rng(7);
    for (const auto& nl : {Nonlinearity::power(1.0, 3.0), Nonlinearity::power(0.5, 1.5), Nonlinearity::sine(1.0)}) {
        std::uniform_real_distribution<double> dist(0.0, nl.scan_max());
        for (int i = 0; i < 100; ++i) {
            const double s = dist(rng);
            const double closed = nl.F(s);
            INFO(nl.family() << " s = " << s);
            CHECK(std::abs(nl.F_by_quadrature(s) - closed) <= 1e-10 * std::max(1.0, std::abs(closed)));
        }
    }
}

TEST_CASE("F differences match an independent Simpson rule", "[nonlinearity]") {
    std::mt19937_64 rng(11);
    struct Case {
        Nonlinearity nl;
        std::function<double(double)> f;
    };
    std::vector<Case> cases{
        {Nonlinearity::power(1.0, 3.0), [](double s) { return oracle::power_f(1.0, 3.0, s); }},
        {Nonlinearity::sine(2.0), [](double s) { return oracle::sine_f(2.0, s); }},
        {Nonlinearity::sine(1.5), [](double s) { return oracle::sine_f(1.5, s); }},
    };
    for (const auto& c : cases) {
        std::uniform_real_distribution<double> dist(0.0, std::min(c.nl.scan_max(), 10.0));
        for (int i = 0; i < 20; ++i) {
            double a = dist(rng);
            double b = dist(rng);
            if (a > b) std::swap(a, b);
            const double expected = oracle::simpson(c.f, a, b, 200000);
            INFO(c.nl.family() << " [" << a << ", " << b << "]");
            CHECK_THAT(c.nl.F(b) - c.nl.F(a), WithinAbs(expected, 1e-10 * std::max(1.0, std::abs(expected))));
        }
    }
}

TEST_CASE("power thresholds match closed forms on the 5x5 grid", "[nonlinearity]") {
    for (double lambda : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        for (double q : {1.5, 2.0, 3.0, 4.0, 5.0}) {
            auto nl = Nonlinearity::power(lambda, q);
            const double xi0 = oracle::power_xi0(lambda, q);
            if (xi0 > 0.5 * nl.scan_max()) nl.set_scan_max(2.0 * xi0);
            const Thresholds th = compute_thresholds(nl, 3);
            INFO("lambda = " << lambda << " q = " << q);
            CHECK_THAT(th.alpha, WithinRel(oracle::power_alpha(lambda, q), 1e-10));
            CHECK_THAT(th.xi0, WithinRel(xi0, 1e-10));
            CHECK_FALSE(th.beta_finite());
            CHECK(nl.F(th.gamma) > 0.0);
            CHECK(th.alpha < th.xi0);
        }
    }
}

TEST_CASE("specific power thresholds", "[nonlinearity]") {
    const auto th1 = compute_thresholds(Nonlinearity::power(1.0, 3.0), 3);
    CHECK_THAT(th1.alpha, WithinRel(1.0, 1e-10));
    CHECK_THAT(th1.xi0, WithinRel(std::sqrt(2.0), 1e-10));
    const auto th4 = compute_thresholds(Nonlinearity::power(4.0, 3.0), 3);
    CHECK_THAT(th4.alpha, WithinRel(2.0, 1e-10));
    CHECK_THAT(th4.xi0, WithinRel(2.0 * std::sqrt(2.0), 1e-10));
}

TEST_CASE("sine thresholds", "[nonlinearity]") {
    const double pi = std::numbers::pi;
    for (double q : {1.0, 2.0, 3.0}) {
        const auto th = compute_thresholds(Nonlinearity::sine(q), 2);
        INFO("q = " << q);
        CHECK_THAT(th.alpha, WithinRel(pi, 1e-10));
        CHECK_THAT(th.beta, WithinRel(2.0 * pi, 1e-10));
        CHECK(th.alpha < th.xi0);
        CHECK(th.xi0 < th.beta);
        CHECK(th.gamma > th.xi0);
    }
    const auto th1 = compute_thresholds(Nonlinearity::sine(1.0), 2);
    CHECK_THAT(th1.xi0, WithinRel(oracle::sine1_xi0(), 1e-10));
}

TEST_CASE("threshold search diagnoses missing alpha or gamma", "[nonlinearity]") {
    const auto positive = Nonlinearity::custom("positive", [](double s) { return s > 0.0 ? s : 0.0; });
    CHECK_THROWS_WITH(compute_thresholds(positive, 3), ContainsSubstring("(f3)"));

    const auto negative = Nonlinearity::custom("negative", [](double s) { return s > 0.0 ? -s : 0.0; });
    CHECK_THROWS_WITH(compute_thresholds(negative, 3), ContainsSubstring("(f3)"));

    // F(+inf) = 1/2 - sqrt(pi)/2 < 0, so F never becomes positive
    const auto no_gamma = Nonlinearity::custom("no_gamma", [](double s) { return s > 0.0 ? (s - 1.0) * std::exp(-s * s) : 0.0; });
    CHECK_THROWS_WITH(compute_thresholds(no_gamma, 3), ContainsSubstring("(f5)"));
    const auto rep = check_assumptions(no_gamma, 3);
    CHECK(rep.status.at("f5") == Verdict::Fail);
    CHECK_FALSE(rep.passed());
    CHECK_FALSE(rep.thresholds.has_value());
}

TEST_CASE("assumption report for the power family", "[nonlinearity]") {
    const auto rep = check_assumptions(Nonlinearity::power(1.0, 3.0), 3);
    CHECK(rep.passed());
    for (const char* key : {"f1", "f2", "f3", "f4", "f5", "f6"}) {
        INFO(key);
        CHECK(rep.status.at(key) == Verdict::Pass);
    }
    REQUIRE(rep.f4_limit_estimate.has_value());
    // f'(alpha) = -lambda + q lambda
    CHECK_THAT(*rep.f4_limit_estimate, WithinAbs(2.0, 1e-3));
    CHECK_FALSE(rep.f4_unbounded);
    CHECK_FALSE(rep.tabulated);
    CHECK_FALSE(rep.evidence.empty());
}

TEST_CASE("sine family with q = 2 fails f4 in dimension 3", "[nonlinearity]") {
    const auto rep = check_assumptions(Nonlinearity::sine(2.0), 3);
    CHECK(rep.status.at("f4") == Verdict::Fail);
    CHECK_FALSE(rep.passed());
    REQUIRE(rep.f4_limit_estimate.has_value());
    CHECK(*rep.f4_limit_estimate < 1e-6);
}

TEST_CASE("sine family with q = 1 passes in dimension 2 with f4 not applicable", "[nonlinearity]") {
    const auto rep = check_assumptions(Nonlinearity::sine(1.0), 2);
    CHECK(rep.passed());
    CHECK(rep.status.at("f4") == Verdict::NotApplicable);
    const auto rep2 = check_assumptions(Nonlinearity::power(1.0, 3.0), 2);
    CHECK(rep2.status.at("f4") == Verdict::NotApplicable);
}

TEST_CASE("F stays above F(alpha) below beta", "[nonlinearity]") {
    std::mt19937_64 rng(3);
    for (const auto& nl : {Nonlinearity::power(1.0, 3.0), Nonlinearity::power(4.0, 2.0), Nonlinearity::sine(1.0), Nonlinearity::sine(2.0)}) {
        const auto th = compute_thresholds(nl, 3);
        const double Fa = nl.F(th.alpha);
        std::uniform_real_distribution<double> dist(0.0, th.upper(nl.scan_max()));
        for (int i = 0; i < 1000; ++i) {
            const double s = dist(rng);
            INFO(nl.family() << " s = " << s);
            CHECK(nl.F(s) >= Fa - 1e-12 * std::max(1.0, std::abs(Fa)));
        }
    }
}

TEST_CASE("f is positive between alpha and xi0", "[nonlinearity]") {
    for (const auto& nl : {Nonlinearity::power(1.0, 3.0), Nonlinearity::sine(1.0)}) {
        const auto th = compute_thresholds(nl, 3);
        for (int i = 1; i <= 500; ++i) {
            const double s = th.alpha + (th.xi0 - th.alpha) * i / 500.0;
            CHECK(nl.f(s) > 0.0);
        }
    }
}

TEST_CASE("truncation at beta", "[nonlinearity]") {
    const auto power = Nonlinearity::power(1.0, 3.0);
    const auto th_power = compute_thresholds(power, 3);
    const auto same = truncate_at_beta(power, th_power);
    for (double s : {0.3, 1.0, 2.5, 40.0}) CHECK(same.f(s) == power.f(s));

    const auto sine = Nonlinearity::sine(1.0);
    const auto th = compute_thresholds(sine, 2);
    const auto cut = truncate_at_beta(sine, th);
    CHECK(cut.f(7.0) == 0.0);
    CHECK_THAT(cut.f(4.0), WithinAbs(-4.0 * std::sin(4.0), 1e-14));
    CHECK(cut.f(4.0) > 0.0);
    CHECK_THAT(cut.F(7.0), WithinAbs(sine.F(th.beta), 1e-12));

    const auto twice = truncate_at_beta(cut, th);
    for (double s : {1.0, 4.0, 6.0, 6.3, 7.0, 20.0}) {
        CHECK(twice.f(s) == cut.f(s));
        CHECK(twice.F(s) == cut.F(s));
    }
}

TEST_CASE("tabulated nonlinearity", "[nonlinearity]") {
    std::vector<double> s;
    std::vector<double> f;
    for (int i = 0; i <= 400; ++i) {
        s.push_back(i * 0.01);
        f.push_back(oracle::power_f(1.0, 3.0, i * 0.01));
    }
    const auto nl = Nonlinearity::tabulated(s, f);
    CHECK(nl.is_tabulated());
    CHECK(nl.scan_max() == 4.0);
    CHECK_THAT(nl.f(1.234), WithinAbs(oracle::power_f(1.0, 3.0, 1.234), 1e-4));
    CHECK_THAT(nl.F(2.0), WithinAbs(2.0, 1e-4));
    const auto rep = check_assumptions(nl, 3);
    CHECK(rep.tabulated);
    REQUIRE(rep.thresholds.has_value());
    CHECK_THAT(rep.thresholds->alpha, WithinAbs(1.0, 1e-4));
    CHECK_THAT(rep.thresholds->xi0, WithinAbs(std::sqrt(2.0), 1e-4));

    CHECK_THROWS_AS(Nonlinearity::tabulated({0.0, 1.0, 0.5, 2.0}, {0, 0, 0, 0}), PreconditionError);
    CHECK_THROWS_AS(Nonlinearity::tabulated({0.1, 1.0, 1.5, 2.0}, {0, 0, 0, 0}), PreconditionError);
}

TEST_CASE("custom nonlinearity without primitive uses quadrature", "[nonlinearity]") {
    const auto nl = Nonlinearity::custom("cubic", [](double s) { return s > 0.0 ? -s + s * s * s : 0.0; });
    CHECK_FALSE(nl.has_closed_primitive());
    CHECK_THAT(nl.F(2.0), WithinAbs(2.0, 1e-12));
    const auto th = compute_thresholds(nl, 3);
    CHECK_THAT(th.xi0, WithinRel(std::sqrt(2.0), 1e-10));
}
