#include "datamkt/numerics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace datamkt;

TEST_CASE("integrate matches closed forms") {
    // Hand values: int_1^10 x/9 dx = (100-1)/18 = 5.5; int_0^1 x^2 dx = 1/3.
    CHECK(integrate([](double x) { return x / 9.0; }, 1.0, 10.0) == doctest::Approx(5.5).epsilon(1e-12));
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-9));
}

TEST_CASE("integrate over an empty interval is exactly zero") {
    CHECK(integrate([](double) { return 123.0; }, 4.0, 4.0) == 0.0);
}

TEST_CASE("integrate reports non-finite integrands with the abscissa") {
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / (x - 0.5); }, 0.0, 1.0), NumericsError);
}

TEST_CASE("integrate is linear on random polynomial pairs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    Tolerances tol;
    for (int trial = 0; trial < 20; ++trial) {
        const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng), c3 = coef(rng);
        const double d0 = coef(rng), d1 = coef(rng), d2 = coef(rng);
        const double alpha = coef(rng), beta = coef(rng);
        auto f = [&](double x) { return c0 + c1 * x + c2 * x * x + c3 * x * x * x; };
        auto g = [&](double x) { return d0 + d1 * x + d2 * x * x; };
        auto combo = [&](double x) { return alpha * f(x) + beta * g(x); };
        const double lhs = integrate(combo, -1.0, 2.0, tol);
        const double rhs = alpha * integrate(f, -1.0, 2.0, tol) + beta * integrate(g, -1.0, 2.0, tol);
        CHECK(std::abs(lhs - rhs) <= 4.0 * tol.quad_abs + 1e-12 * std::abs(rhs));
    }
}

TEST_CASE("find_root on a linear function") {
    const double c = 0.7213;
    CHECK(find_root([&](double x) { return x - c; }, 0.0, 1.0) == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("find_root returns an exact endpoint zero") {
    // f(x) = (10*3.5 - 5) - x*(4*3.5 - 11) = 30 - 3x, root at the bracket end.
    auto f = [](double x) { return (10.0 * 3.5 - 5.0) - x * (4.0 * 3.5 - 11.0); };
    CHECK(find_root(f, 1.0, 10.0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("find_root refuses an unbracketed interval") {
    CHECK_THROWS_AS(find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), NoRootBracket);
}

TEST_CASE("find_root handles flat-ish functions near the root") {
    auto f = [](double x) { return (x - 2.0) * (x - 2.0) * (x - 2.0); };
    const double r = find_root(f, 0.0, 5.0);
    CHECK(std::abs(r - 2.0) <= 1e-9);
    CHECK(std::abs(f(r)) <= std::abs(f(0.0)) * 1e-6);
}

TEST_CASE("monotone_scan directions") {
    CHECK(monotone_scan([](double x) { return x; }, 0.0, 1.0, 16, ScanDirection::Increasing).pass);
    CHECK(monotone_scan([](double x) { return -x; }, 0.0, 1.0, 16, ScanDirection::NonIncreasing).pass);
    CHECK(monotone_scan([](double) { return 3.0; }, 0.0, 1.0, 16, ScanDirection::NonIncreasing).pass);

    // Constant fails the strict increasing requirement.
    CHECK_FALSE(monotone_scan([](double) { return 3.0; }, 0.0, 1.0, 16, ScanDirection::Increasing).pass);

    const ScanResult wiggle =
        monotone_scan([](double x) { return std::sin(6.0 * x); }, 0.0, 3.0, 64, ScanDirection::Increasing);
    CHECK_FALSE(wiggle.pass);
    CHECK(wiggle.f_hi <= wiggle.f_lo + 1e-12); // the witness pair really violates
}

TEST_CASE("monotone_scan on the revenue cut-off closed form") {
    // tau(s) = (10 s - 5) / (4 s - 11), non-increasing on [3.5, 10].
    auto tau = [](double s) { return (10.0 * s - 5.0) / (4.0 * s - 11.0); };
    CHECK(monotone_scan(tau, 3.5, 10.0, 128, ScanDirection::NonIncreasing).pass);
}

TEST_CASE("tolerances validate their ranges") {
    Tolerances bad;
    bad.quad_abs = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    Tolerances shallow;
    shallow.max_depth = 5;
    CHECK_THROWS_AS(shallow.validate(), std::invalid_argument);
    CHECK_NOTHROW(Tolerances{}.validate());
}

TEST_CASE("deterministic repeats") {
    auto f = [](double x) { return std::sin(x) * std::exp(-x * 0.25); };
    const double a = integrate(f, 0.0, 6.0);
    const double b = integrate(f, 0.0, 6.0);
    CHECK(a == b);
    const double r1 = find_root([](double x) { return std::cos(x) - 0.3; }, 0.0, 2.0);
    const double r2 = find_root([](double x) { return std::cos(x) - 0.3; }, 0.0, 2.0);
    CHECK(r1 == r2);
}
