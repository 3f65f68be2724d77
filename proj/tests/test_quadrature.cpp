#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "csregions/quadrature.hpp"

using namespace csregions;

TEST_CASE("Gaussian moments integrate to closed form", "[quadrature]") {
    quad::Options opt;
    opt.abs_tol = 1e-13;
    opt.rel_tol = 1e-13;

    auto gauss = [](double t) { return std::exp(-0.5 * t * t); };
    auto res = quad::integrate_adaptive(gauss, quad::geometric_breakpoints(0.5, 40.0), opt);
    CHECK(res.value == Catch::Approx(std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-12));
    CHECK(res.error <= std::max(opt.abs_tol, opt.rel_tol * res.value));

    auto second = [](double t) { return t * t * std::exp(-0.5 * t * t); };
    res = quad::integrate_adaptive(second, quad::geometric_breakpoints(0.5, 40.0), opt);
    CHECK(res.value == Catch::Approx(std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-12));
}

TEST_CASE("Result does not depend on the seeding ladder", "[quadrature]") {
    auto f = [](double t) { return std::exp(-t) * std::cos(3.0 * t); };
    quad::Options opt;
    opt.abs_tol = 1e-12;
    const double a = quad::integrate_adaptive(f, {0.0, 30.0}, opt).value;
    const double b = quad::integrate_adaptive(f, quad::geometric_breakpoints(1e-3, 30.0), opt).value;
    const double exact = (1.0 - std::exp(-30.0) * (std::cos(90.0) - 3.0 * std::sin(90.0))) / 10.0;
    CHECK(a == Catch::Approx(exact).margin(1e-11));
    CHECK(b == Catch::Approx(exact).margin(1e-11));
}

TEST_CASE("Budget exhaustion reports the achieved tolerance", "[quadrature]") {
    auto wiggly = [](double t) { return std::cos(400.0 * t * t); };
    quad::Options opt;
    opt.abs_tol = 1e-15;
    opt.rel_tol = 0.0;
    opt.max_intervals = 4;
    try {
        quad::integrate_adaptive(wiggly, {0.0, 10.0}, opt);
        FAIL("expected NumericalError");
    } catch (const NumericalError& err) {
        CHECK(err.achieved_tolerance > err.requested_tolerance);
    }
}

TEST_CASE("Breakpoints are validated", "[quadrature]") {
    auto f = [](double t) { return t; };
    CHECK_THROWS_AS(quad::integrate_adaptive(f, {1.0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(quad::integrate_adaptive(f, {1.0, 0.5}, {}), std::invalid_argument);
    CHECK_THROWS_AS(quad::geometric_breakpoints(0.0, 1.0), std::invalid_argument);
}
