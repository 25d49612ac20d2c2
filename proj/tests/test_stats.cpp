#include "doctest.h"

#include <cmath>
#include <vector>

#include "renewal/rng.hpp"
#include "renewal/stats.hpp"

using namespace renewal;

TEST_CASE("kolmogorov survival reference values") {
    // Q(1.36) ~ 0.049 and Q(1.63) ~ 0.010 are the classical 5% and 1% points.
    CHECK(stats::kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(0.01));
    CHECK(stats::kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(0.01));
    CHECK(stats::kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("two-sample KS separates shifted samples") {
    RngStream rng(1, 0);
    std::vector<double> a(5000), b(5000), c(5000);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    for (auto& x : c) x = rng.uniform() + 0.1;
    CHECK(stats::ks_two_sample(a, b).p_value > 0.01);
    CHECK(stats::ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("Clopper-Pearson upper limit") {
    // 0 successes out of n: upper limit 1 - (1 - conf)^{1/n}.
    CHECK(stats::binomial_upper_limit(0, 100, 0.99) == doctest::Approx(1.0 - std::pow(0.01, 0.01)).epsilon(1e-9));
    const double ul = stats::binomial_upper_limit(50, 100, 0.99);
    CHECK(ul > 0.6);
    CHECK(ul < 0.65);
    CHECK(stats::binomial_upper_limit(100, 100, 0.99) == 1.0);
}

TEST_CASE("mean estimate and chi-square") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    auto m = stats::mean_estimate(v);
    CHECK(m.mean == 2.5);
    CHECK(m.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    const std::vector<std::uint64_t> counts{50, 50};
    const std::vector<double> probs{0.5, 0.5};
    CHECK(stats::chi_square_gof(counts, probs).p_value == doctest::Approx(1.0));
}
