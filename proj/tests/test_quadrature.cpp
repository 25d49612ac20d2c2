#include "doctest.h"

#include <cmath>

#include "renewal/quadrature.hpp"

namespace quad = renewal::quad;

TEST_CASE("smooth integrand to relative 1e-10") {
    auto r = quad::integrate([](double x) { return std::exp(x); }, 0.0, 2.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("breakpoints handle a jump") {
    auto step = [](double x) { return x < 0.3 ? 1.0 : 5.0; };
    const double bp[] = {0.3};
    auto r = quad::integrate(step, 0.0, 1.0, {}, bp);
    CHECK(r.value == doctest::Approx(0.3 + 3.5).epsilon(1e-13));
}

TEST_CASE("semi-infinite convergence and divergence") {
    auto decaying = quad::integrate_to_infinity([](double x) { return std::exp(-0.5 * x); }, 0.0, 10.0);
    CHECK_FALSE(decaying.divergent);
    CHECK(decaying.value == doctest::Approx(2.0).epsilon(1e-10));

    // Mass far beyond the initial upper limit is still found.
    auto late_peak = quad::integrate_to_infinity(
        [](double x) { return std::exp(-0.5 * (x - 30.0) * (x - 30.0)); }, 0.0, 5.0);
    CHECK(late_peak.value == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-9));

    auto flat = quad::integrate_to_infinity([](double) { return 1.0; }, 0.0, 1.0);
    CHECK(flat.divergent);
    auto growing = quad::integrate_to_infinity([](double x) { return std::exp(0.01 * x); }, 0.0, 1.0);
    CHECK(growing.divergent);
}
