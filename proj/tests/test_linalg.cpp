#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "compactode/linalg.hpp"

using namespace compactode;
using Catch::Approx;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

} // namespace

TEST_CASE("LU solve on known systems") {
    auto a = from_rows({{2, 1, -1}, {-3, -1, 2}, {-2, 1, 2}});
    auto x = solve(a, {8, -11, -3});
    CHECK(x[0] == Approx(2.0));
    CHECK(x[1] == Approx(3.0));
    CHECK(x[2] == Approx(-1.0));

    CHECK_THROWS_AS(solve(from_rows({{1, 2}, {2, 4}}), {1, 1}), SingularMatrix);
}

TEST_CASE("eigenvalues of small matrices") {
    SECTION("diagonal") {
        auto ev = eigenvalues(from_rows({{-2, 0}, {0, 3}}));
        REQUIRE(ev.size() == 2);
        CHECK(ev[0].real() == Approx(-2.0));
        CHECK(ev[1].real() == Approx(3.0));
        CHECK(ev[0].imag() == 0.0);
    }
    SECTION("rotation gives a pure imaginary pair") {
        auto ev = eigenvalues(from_rows({{0, 1}, {-1, 0}}));
        REQUIRE(ev.size() == 2);
        CHECK(ev[0].real() == Approx(0.0).margin(1e-12));
        CHECK(std::abs(ev[0].imag()) == Approx(1.0));
        CHECK(ev[0].imag() == Approx(-ev[1].imag()));
    }
    SECTION("defective Jordan block") {
        auto ev = eigenvalues(from_rows({{2, 1}, {0, 2}}));
        CHECK(ev[0].real() == Approx(2.0));
        CHECK(ev[1].real() == Approx(2.0));
    }
    SECTION("companion matrix of (x-1)(x-2)(x-3)") {
        // x^3 - 6x^2 + 11x - 6
        auto ev = eigenvalues(from_rows({{0, 0, 6}, {1, 0, -11}, {0, 1, 6}}));
        REQUIRE(ev.size() == 3);
        CHECK(ev[0].real() == Approx(1.0).epsilon(1e-9));
        CHECK(ev[1].real() == Approx(2.0).epsilon(1e-9));
        CHECK(ev[2].real() == Approx(3.0).epsilon(1e-9));
    }
    SECTION("complex pair plus real eigenvalue") {
        auto b = from_rows({{1, 2, 0}, {-2, 1, 0}, {0, 0, 5}});
        auto ev = eigenvalues(b);
        REQUIRE(ev.size() == 3);
        CHECK(ev[0].real() == Approx(1.0));
        CHECK(std::abs(ev[0].imag()) == Approx(2.0));
        CHECK(ev[2].real() == Approx(5.0));
    }
}

TEST_CASE("random spectra recovered through similarity transforms") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> lam{u(rng), u(rng), u(rng), u(rng)};
        std::sort(lam.begin(), lam.end());
        const std::size_t n = lam.size();
        Matrix d(n, n);
        for (std::size_t i = 0; i < n; ++i) d(i, i) = lam[i];
        Matrix p = Matrix::identity(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) p(i, j) += 0.3 * u(rng);
        // a = p d p^{-1} computed column by column
        Matrix a(n, n);
        for (std::size_t col = 0; col < n; ++col) {
            std::vector<double> e(n, 0.0);
            e[col] = 1.0;
            auto w = solve(p, e);
            std::vector<double> dw(n);
            for (std::size_t i = 0; i < n; ++i) dw[i] = d(i, i) * w[i];
            auto aw = p * dw;
            for (std::size_t i = 0; i < n; ++i) a(i, col) = aw[i];
        }
        auto ev = eigenvalues(a);
        REQUIRE(ev.size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(ev[i].imag() == Approx(0.0).margin(1e-7));
            CHECK(ev[i].real() == Approx(lam[i]).margin(1e-7));
        }
    }
}
