#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "compactode/transform.hpp"

using namespace compactode;
using Catch::Approx;

namespace {

std::vector<Transform> all_builtin_kinds() {
    return {
        Transform::exponential(1.0),
        Transform::exponential(2.0),
        Transform::exponential(0.7, Sidedness::Right),
        Transform::exponential(1.3, Sidedness::Left),
        Transform::exponential_two_rate(0.8, 1.7),
        Transform::algebraic(1.0),
        Transform::algebraic(2.0),
        Transform::algebraic(0.5),
        Transform::algebraic(1.0, Sidedness::Right),
        Transform::algebraic(2.5, Sidedness::Right),
        Transform::algebraic(1.0, Sidedness::Left),
        Transform::algebraic_two_rate(1.0, 2.0),
    };
}

double interior_lo(const Transform& t) { return t.domain().lo + 1e-3; }
double interior_hi(const Transform& t) { return t.domain().hi - 1e-3; }

} // namespace

TEST_CASE("exponential transform basics") {
    auto tr = Transform::exponential(1.0);
    CHECK(tr.h(0.0) == 0.0);
    CHECK(tr.g(0.0) == 0.0);
    CHECK(tr.g(1.0) == Approx(std::tanh(0.5)).epsilon(1e-12));
    CHECK(tr.h(std::tanh(0.5)) == Approx(1.0).margin(1e-8));

    CHECK(Transform::exponential(2.0).gamma(0.0) == Approx(1.0));
    CHECK_THROWS_AS(Transform::exponential(0.0), NonPositiveRate);
    CHECK_THROWS_AS(Transform::exponential(-1.0), NonPositiveRate);
}

TEST_CASE("algebraic transform basics") {
    auto tr = Transform::algebraic(1.0);
    CHECK(tr.g(2.0) == Approx((-1.0 + std::sqrt(17.0)) / 4.0).epsilon(1e-12));
    CHECK(tr.g(2.0) == Approx(0.7807764).margin(1e-7));
    CHECK(tr.h(tr.g(2.0)) == Approx(2.0).margin(1e-10));
    CHECK(tr.h(0.5) == Approx(0.5 / 0.75).epsilon(1e-12));

    for (double a : {0.5, 1.0, 2.0, 3.7})
        CHECK(Transform::algebraic(a).gamma(0.0) == Approx(1.0));
    CHECK_THROWS_AS(Transform::algebraic(0.0), NonPositiveRate);
}

TEST_CASE("h' gamma identity and inverse pairs on interior grids") {
    for (const auto& tr : all_builtin_kinds()) {
        double lo = interior_lo(tr), hi = interior_hi(tr);
        for (int i = 0; i <= 100; ++i) {
            double s = lo + (hi - lo) * i / 100.0;
            double prod = tr.h_prime(s) * tr.gamma(s);
            REQUIRE(std::abs(prod - 1.0) < 1e-10);
        }
        for (int i = 0; i <= 1000; ++i) {
            double s = lo + (hi - lo) * i / 1000.0;
            REQUIRE(std::abs(tr.g(tr.h(s)) - s) < 1e-10);
        }
        // The t-range stays inside the window where 1 -+ s is representable
        // with enough bits for a meaningful h(g(t)) round trip; beyond it the
        // s-coordinate itself saturates (exponential charts reach the wall
        // at |t| ~ 36/alpha).
        bool exp_kind = tr.kind() == Transform::Kind::ExpSym ||
                        tr.kind() == Transform::Kind::ExpRight ||
                        tr.kind() == Transform::Kind::ExpLeft ||
                        tr.kind() == Transform::Kind::ExpTwoRate;
        double reach = exp_kind ? 12.0 / std::max(tr.alpha_minus(), tr.alpha_plus()) : 30.0;
        double tlo = tr.domain().lo_compact ? -reach : tr.h(tr.domain().lo) + 1e-6;
        double thi = tr.domain().hi_compact ? reach : tr.h(tr.domain().hi) - 1e-6;
        double prev = -1e308;
        for (int i = 0; i <= 1000; ++i) {
            double t = tlo + (thi - tlo) * i / 1000.0;
            double s = tr.g(t);
            REQUIRE(s >= prev); // monotone
            prev = s;
            REQUIRE(std::abs(tr.h(s) - t) <= 1e-8 * std::max(1.0, std::abs(t)));
        }
    }
}

TEST_CASE("numeric inversion round trip where no closed form exists") {
    auto tr = Transform::algebraic(2.0);
    CHECK(tr.h(tr.g(3.0)) == Approx(3.0).margin(1e-9));
    auto tr2 = Transform::exponential_two_rate(0.8, 1.7);
    CHECK(tr2.h(tr2.g(-4.0)) == Approx(-4.0).margin(1e-9));
}

TEST_CASE("gamma vanishes exactly at compact ends") {
    for (const auto& tr : all_builtin_kinds()) {
        if (tr.domain().lo_compact) CHECK(tr.gamma(tr.domain().lo) == 0.0);
        if (tr.domain().hi_compact) CHECK(tr.gamma(tr.domain().hi) == 0.0);
    }
}

TEST_CASE("gamma' endpoint values per family") {
    CHECK(Transform::exponential(2.0).gamma_prime(1.0) == -2.0);
    CHECK(Transform::exponential(2.0).gamma_prime(-1.0) == 2.0);
    CHECK(Transform::exponential(1.5).gamma_prime(1.0) == -1.5);
    for (double a : {0.5, 1.0, 2.0}) {
        CHECK(Transform::algebraic(a).gamma_prime(1.0) == 0.0);
        CHECK(Transform::algebraic(a).gamma_prime(-1.0) == 0.0);
    }
    auto two = Transform::exponential_two_rate(0.8, 1.7);
    CHECK(two.gamma_prime(1.0) == -1.7);
    CHECK(two.gamma_prime(-1.0) == 0.8);
    CHECK(*two.endpoint_rate(Side::Future) == -1.7);
    CHECK(*two.endpoint_rate(Side::Past) == 0.8);
}

TEST_CASE("gamma' interior matches finite differences of gamma") {
    for (const auto& tr : all_builtin_kinds()) {
        double lo = interior_lo(tr), hi = interior_hi(tr);
        for (int i = 1; i < 40; ++i) {
            double s = lo + (hi - lo) * i / 40.0;
            double h = 1e-6;
            double fd = (tr.gamma(s + h) - tr.gamma(s - h)) / (2 * h);
            REQUIRE(tr.gamma_prime(s) == Approx(fd).margin(1e-5));
        }
    }
}

TEST_CASE("t-space derivative g_dot is accurate into the far tails") {
    SECTION("moderate t: matches finite differences of g") {
        for (const auto& tr : all_builtin_kinds()) {
            double tlo = tr.domain().lo_compact ? -5.0 : tr.h(tr.domain().lo) + 0.1;
            double thi = tr.domain().hi_compact ? 5.0 : tr.h(tr.domain().hi) - 0.1;
            for (int i = 0; i <= 20; ++i) {
                double t = tlo + (thi - tlo) * i / 20.0;
                double h = 1e-6;
                double fd = (tr.g(t + h) - tr.g(t - h)) / (2 * h);
                auto gd = tr.g_dot(t);
                REQUIRE(gd);
                REQUIRE(*gd == Approx(fd).margin(1e-7));
            }
        }
    }
    SECTION("exponential tail keeps precision beyond the s-rounding wall") {
        auto tr = Transform::exponential(1.0);
        // exact: 0.5 sech^2(t/2) ~ 2 e^{-t}
        for (double t : {50.0, 200.0, 600.0})
            CHECK(*tr.g_dot(t) == Approx(2.0 * std::exp(-t) ).epsilon(1e-10));
    }
    SECTION("algebraic tail follows the t^{-alpha-1} law") {
        auto tr = Transform::algebraic(1.0);
        for (double t : {1e4, 1e8, 1e12}) {
            double expect = 0.5 / (t * t); // leading order
            CHECK(*tr.g_dot(t) == Approx(expect).epsilon(1e-3));
        }
        // right-sided order alpha: g' ~ alpha t^(-alpha-1)
        auto tr2 = Transform::algebraic(2.0, Sidedness::Right);
        for (double t : {1e4, 1e8})
            CHECK(*tr2.g_dot(t) == Approx(2.0 * std::pow(t, -3.0)).epsilon(1e-3));
    }
}

TEST_CASE("second-derivative ratio in t-space") {
    CHECK(*Transform::exponential(1.5).second_ratio(1e6) == Approx(-1.5));
    CHECK(*Transform::exponential(1.5).second_ratio(-1e6) == Approx(1.5));
    CHECK(*Transform::algebraic(1.0).second_ratio(std::ldexp(1.0, 30)) ==
          Approx(0.0).margin(1e-6));
}

TEST_CASE("gamma-based transform") {
    SECTION("tanh forcing reproduces g = tanh") {
        ForcingProfile p({Expr::parse("tanh(t)")});
        auto tr = Transform::gamma_based(p, 0);
        for (double t : {-8.0, -1.0, 0.0, 0.5, 3.0, 12.0})
            CHECK(tr.g(t) == Approx(std::tanh(t)).margin(1e-9));
        CHECK(tr.h(0.5) == Approx(std::atanh(0.5)).margin(1e-9));
        CHECK(tr.gamma(0.3) == Approx(1 - 0.3 * 0.3).margin(1e-8));
        CHECK(*tr.endpoint_rate(Side::Future) == Approx(-2.0).margin(1e-6));
        CHECK(*tr.endpoint_rate(Side::Past) == Approx(2.0).margin(1e-6));
    }
    SECTION("constant component is degenerate") {
        ForcingProfile p({Expr::parse("tanh(t)"), Expr::parse("3 + 0*t")});
        CHECK_THROWS_AS(Transform::gamma_based(p, 1), DegenerateLimits);
    }
    SECTION("sech is not monotone two-sidedly") {
        ForcingProfile p({Expr::parse("sech(t)")});
        CHECK_THROWS_AS(Transform::gamma_based(p, 0), NotMonotone);
    }
    SECTION("sech is fine right-sided") {
        ForcingProfile p({Expr::parse("sech(t)")}, Sides::FutureOnly);
        auto tr = Transform::gamma_based(p, 0, Sidedness::Right);
        CHECK(tr.g(0.0) == Approx(0.0).margin(1e-12));
        CHECK(tr.g(1.0) == Approx(1.0 - 1.0 / std::cosh(1.0)).margin(1e-10));
    }
}

TEST_CASE("custom transforms") {
    SECTION("h expression equivalent to the exponential family") {
        auto tr = Transform::custom({}, Expr::parse("ln((1+s)/(1-s))"), Sidedness::TwoSided);
        auto ref = Transform::exponential(1.0);
        for (double s : {-0.9, -0.3, 0.0, 0.4, 0.85}) {
            CHECK(tr.h(s) == Approx(ref.h(s)).epsilon(1e-12));
            CHECK(tr.gamma(s) == Approx(ref.gamma(s)).epsilon(1e-10));
            CHECK(tr.gamma_prime(s) == Approx(ref.gamma_prime(s)).margin(1e-9));
        }
        CHECK(tr.g(2.0) == Approx(ref.g(2.0)).margin(1e-10));
        CHECK(*tr.endpoint_rate(Side::Future) == Approx(-1.0).margin(1e-6));
    }
    SECTION("g expression only") {
        auto tr = Transform::custom(Expr::parse("1 - exp(-t)"), {}, Sidedness::Right);
        CHECK(tr.g(1.0) == Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
        CHECK(tr.h(0.5) == Approx(std::log(2.0)).margin(1e-9));
        CHECK(*tr.second_ratio(16.0) == Approx(-1.0).margin(1e-9));
    }
    SECTION("validation rejects a transform whose speed does not vanish") {
        CHECK_THROWS_AS(Transform::custom({}, Expr::parse("s")), NotMonotone);
        CHECK_THROWS_AS(Transform::custom({}, Expr::parse("0 - s")), NotMonotone);
    }
    SECTION("g and h cross-checked when both given") {
        CHECK_NOTHROW(Transform::custom(Expr::parse("tanh(t/2)"),
                                        Expr::parse("ln((1+s)/(1-s))")));
        CHECK_THROWS_AS(Transform::custom(Expr::parse("tanh(t)"),
                                          Expr::parse("ln((1+s)/(1-s))")),
                        Error);
    }
}

TEST_CASE("compact ends have no finite time image") {
    auto tr = Transform::exponential(1.0);
    CHECK_THROWS_AS(tr.h(1.0), OutOfDomain);
    CHECK_THROWS_AS(tr.h(-1.0), OutOfDomain);
    auto right = Transform::exponential(1.0, Sidedness::Right);
    CHECK_THROWS_AS(right.h(1.0), OutOfDomain);
    CHECK_NOTHROW(right.h(-1.0)); // non-compact edge has a finite image
    CHECK(right.h(-1.0) == Approx(-std::log(2.0)));
}

TEST_CASE("two-rate monotonicity guard") {
    CHECK_THROWS_AS(Transform::algebraic_two_rate(10.0, 0.2), NotMonotone);
    CHECK_NOTHROW(Transform::algebraic_two_rate(2.0, 1.0));
}
