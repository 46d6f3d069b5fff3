#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <thread>

#include "compactode/expr.hpp"

using namespace compactode;
using Catch::Approx;

TEST_CASE("grammar acceptance and free variables") {
    auto e = Expr::parse("tanh(alpha*t/2)");
    REQUIRE(e.vars() == std::vector<std::string>{"alpha", "t"});

    auto q = Expr::parse("(x1+Gamma1)^2 - 1");
    REQUIRE(q.vars() == std::vector<std::string>{"x1", "Gamma1"});
}

TEST_CASE("syntax errors carry byte offsets") {
    try {
        Expr::parse("x1 + * 2");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& err) {
        CHECK(err.offset() == 5);
    }

    CHECK_THROWS_AS(Expr::parse("foo(x)"), UnknownFunction);
    CHECK_THROWS_AS(Expr::parse("tanh(a, b)"), ArityError);
    CHECK_THROWS_AS(Expr::parse("1 +"), SyntaxError);
    CHECK_THROWS_AS(Expr::parse("(1"), SyntaxError);
    CHECK_THROWS_AS(Expr::parse(""), SyntaxError);
}

TEST_CASE("precedence and associativity") {
    CHECK(Expr::parse("2^3^2").eval({}) == Approx(512.0));
    CHECK(Expr::parse("-2^2").eval({}) == Approx(-4.0));
    CHECK(Expr::parse("2*3 + 4/2").eval({}) == Approx(8.0));
    CHECK(Expr::parse("2^-2").eval({}) == Approx(0.25));
    CHECK(Expr::parse("1 - 2 - 3").eval({}) == Approx(-4.0));
    CHECK(Expr::parse("8/4/2").eval({}) == Approx(1.0));
    CHECK(Expr::parse("-x^2").eval({{"x", 3.0}}) == Approx(-9.0));
    // integer powers accept negative bases; fractional ones do not
    CHECK(Expr::parse("(-2)^3").eval({}) == Approx(-8.0));
    CHECK(Expr::parse("x^2.5").eval({{"x", 4.0}}) == Approx(32.0));
}

TEST_CASE("evaluation examples") {
    CHECK(Expr::parse("tanh(t)").eval({{"t", 0.0}}) == 0.0);
    CHECK(Expr::parse("sech(t)").eval({{"t", 0.0}}) == 1.0);
    CHECK(Expr::parse("ln((1+s)/(1-s))").eval({{"s", 0.5}}) == Approx(1.0986123).margin(1e-7));
}

TEST_CASE("evaluation domain errors") {
    CHECK_THROWS_AS(Expr::parse("ln(x)").eval({{"x", -1.0}}), DomainError);
    CHECK_THROWS_AS(Expr::parse("ln(x)").eval({{"x", 0.0}}), DomainError);
    CHECK_THROWS_AS(Expr::parse("sqrt(x)").eval({{"x", -2.0}}), DomainError);
    CHECK_THROWS_AS(Expr::parse("x^0.5").eval({{"x", -2.0}}), DomainError);
    CHECK_THROWS_AS(Expr::parse("1/x").eval({{"x", 0.0}}), DomainError);
    CHECK_THROWS_AS(Expr::parse("exp(x)").eval({{"x", 1e6}}), DomainError); // overflow
    CHECK_THROWS_AS(Expr::parse("x + y").eval({{"x", 1.0}}), UnboundVariable);
}

TEST_CASE("derivative examples") {
    CHECK(Expr::parse("tanh(t)").deriv("t", {{"t", 0.0}}) == Approx(1.0));
    CHECK(Expr::parse("s/(1-s^2)").deriv("s", {{"s", 0.0}}) == Approx(1.0));
    // d/ds s/(1-s^2) = (1+s^2)/(1-s^2)^2
    double s = 0.3;
    double expected = (1 + s * s) / std::pow(1 - s * s, 2);
    CHECK(Expr::parse("s/(1-s^2)").deriv("s", {{"s", s}}) == Approx(expected).epsilon(1e-12));
    // derivative with respect to an absent variable is zero
    CHECK(Expr::parse("t*t").deriv("q", {{"t", 2.0}}) == 0.0);
}

TEST_CASE("second derivatives via nested duals") {
    auto e = Expr::parse("tanh(t)");
    std::vector<double> vals{0.5};
    auto d2 = e.eval_dual2(vals, 0);
    double t = std::tanh(0.5);
    CHECK(d2.v.v == Approx(t));
    CHECK(first(d2) == Approx(1 - t * t));
    CHECK(second(d2) == Approx(-2 * t * (1 - t * t)).epsilon(1e-12));

    auto g = Expr::parse("exp(-(t^2))");
    std::vector<double> tv{1.25};
    auto gd = g.eval_dual2(tv, 0);
    double x = 1.25, f = std::exp(-x * x);
    CHECK(gd.v.v == Approx(f));
    CHECK(first(gd) == Approx(-2 * x * f));
    CHECK(second(gd) == Approx((4 * x * x - 2) * f).epsilon(1e-12));
}

namespace {

struct SampleDomain {
    double lo, hi;
};

// expression zoo exercising every supported function away from singularities
const std::vector<std::pair<const char*, SampleDomain>> kZoo = {
    {"tanh(a*x/2)", {-3.0, 3.0}},
    {"sech(x)^2 + a*x", {-3.0, 3.0}},
    {"exp(-(x^2)/2)*sin(3*x)", {-2.0, 2.0}},
    {"ln(1 + x^2) / (2 + cos(x))", {-4.0, 4.0}},
    {"sqrt(1 + x^2)", {-4.0, 4.0}},
    {"(x + a)^3 - x/(1 + a^2)", {-2.0, 2.0}},
    {"x^2.5 + 1/x", {0.2, 4.0}},
    {"abs(x)*x", {0.5, 3.0}},
    {"sin(x)*cos(a*x) + tanh(x)^3", {-3.0, 3.0}},
    {"exp(a*tanh(x)) - sech(a + x)", {-2.0, 2.0}},
};

} // namespace

TEST_CASE("forward derivatives agree with central finite differences") {
    std::mt19937 rng(20260810);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 1000) {
        const auto& [src, dom] = kZoo[rng() % kZoo.size()];
        auto e = Expr::parse(src);
        double x = dom.lo + (dom.hi - dom.lo) * unit(rng);
        double a = -1.5 + 3.0 * unit(rng);
        std::map<std::string, double> env{{"x", x}, {"a", a}};
        double fd, ad;
        try {
            std::map<std::string, double> lo = env, hi = env;
            lo["x"] = x - h;
            hi["x"] = x + h;
            fd = (e.eval(hi) - e.eval(lo)) / (2 * h);
            ad = e.deriv("x", env);
        } catch (const DomainError&) {
            continue; // resample: stepped over a domain edge
        }
        double scale = std::max({1.0, std::abs(fd), std::abs(ad)});
        REQUIRE(std::abs(ad - fd) / scale < 1e-6);
        ++checked;
    }
}

TEST_CASE("render round-trips to an evaluation-equivalent tree") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (const auto& [src, dom] : kZoo) {
        auto e = Expr::parse(src);
        auto r = Expr::parse(e.render());
        REQUIRE(r.vars() == e.vars());
        int done = 0;
        while (done < 100) {
            std::map<std::string, double> env;
            env["x"] = dom.lo + (dom.hi - dom.lo) * (unit(rng) + 2.0) / 4.0;
            env["a"] = unit(rng);
            try {
                double v1 = e.eval(env);
                double v2 = r.eval(env);
                REQUIRE(std::abs(v1 - v2) <= 1e-12 * std::max(1.0, std::abs(v1)));
            } catch (const DomainError&) {
                continue;
            }
            ++done;
        }
    }
}

TEST_CASE("shared expressions evaluate safely from concurrent workers") {
    auto e = Expr::parse("exp(a*tanh(x)) + sech(x)^2");
    std::vector<std::thread> workers;
    std::vector<double> results(4, 0.0);
    for (int w = 0; w < 4; ++w) {
        workers.emplace_back([&, w] {
            double acc = 0.0;
            std::vector<double> vals{0.7, 0.0};
            for (int i = 0; i < 20000; ++i) {
                vals[1] = -2.0 + 4.0 * (i / 20000.0);
                acc += e.eval_packed(vals);
            }
            results[static_cast<std::size_t>(w)] = acc;
        });
    }
    for (auto& t : workers) t.join();
    for (int w = 1; w < 4; ++w)
        CHECK(results[static_cast<std::size_t>(w)] == Approx(results[0]));
}
