#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "renewal/rng.hpp"
#include "renewal/stats.hpp"

using renewal::RngStream;

TEST_CASE("philox4x32-10 known-answer vectors") {
    auto zero = renewal::philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);

    auto ones = renewal::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                    {0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);

    auto pi = renewal::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                  {0xa4093822u, 0x299f31d0u});
    CHECK(pi[0] == 0xd16cfe09u);
    CHECK(pi[1] == 0x94fdccebu);
    CHECK(pi[2] == 0x5001e420u);
    CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("same (seed, stream) replays, different streams differ") {
    RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::vector<std::uint64_t> va, vb, vc, vd;
    for (int i = 0; i < 100; ++i) {
        va.push_back(a());
        vb.push_back(b());
        vc.push_back(c());
        vd.push_back(d());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
}

TEST_CASE("uniform draws are in the open unit interval and uniform") {
    RngStream rng(1, 0);
    std::vector<double> xs;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        xs.push_back(u);
    }
    auto ks = renewal::stats::ks_one_sample(xs, [](double x) { return x; });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("independent streams are uncorrelated") {
    const int n = 20000;
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
        RngStream s0(9, static_cast<std::uint64_t>(2 * i)), s1(9, static_cast<std::uint64_t>(2 * i + 1));
        a.push_back(s0.uniform());
        b.push_back(s1.uniform());
    }
    double cov = 0.0;
    for (int i = 0; i < n; ++i) cov += (a[i] - 0.5) * (b[i] - 0.5);
    cov /= n;
    // var(U) = 1/12, so the sample correlation has sd about 1/sqrt(n).
    CHECK(std::abs(cov * 12.0) < 4.0 / std::sqrt(n));
}

TEST_CASE("geometric draws have mean 1/p") {
    RngStream rng(5, 0);
    const double p = 0.2;
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.geometric(p));
    const double sd = std::sqrt((1 - p) / (p * p) / n);
    CHECK(std::abs(sum / n - 1.0 / p) < 4.0 * sd);
}
