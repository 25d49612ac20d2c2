#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "renewal/bounds.hpp"
#include "renewal/error.hpp"
#include "renewal/sim.hpp"
#include "renewal/stats.hpp"

using namespace renewal;

namespace {

const UniformComponent kExpComp{1.0, 1.0, 2.0 * std::exp(-2.0)};
const BoundParams kExpValid{0.5, 0.5, 2e-4};
const UniformComponent kUniComp{1.5, 0.5, 0.9};
const BoundParams kUniParams{2.0, 0.5, 0.005};

stats::MeanEstimate mean_of(const std::vector<double>& v) { return stats::mean_estimate(v); }

}  // namespace

TEST_CASE("step1: gap inside the threshold is left alone") {
    auto m = make_exponential(1.0);
    RngStream rng(1, 0);
    for (double x : {1.5, -1.5, 0.0, 3.0}) {
        const auto o = step1_walk(m, x, 3.0, rng);
        CHECK(o.T_R == 0.0);
        CHECK(o.T_R_bar == 0.0);
        CHECK(o.D_R == std::abs(x));
        CHECK(o.steps == 0);
    }
    CHECK_THROWS_AS(step1_walk(m, 1.0, 0.0, rng), DomainError);
}

TEST_CASE("step1: terminal gap and elapsed time match the increments") {
    auto m = make_uniform(1.0, 2.0);
    for (std::uint64_t i = 0; i < 500; ++i) {
        RngStream rng(7, i);
        Step1Increments inc;
        const double x = 2.0 + 10.0 * (i % 7);
        const auto o = step1_walk(m, x, 1.2, rng, &inc);
        double a = x, b = 0.0;
        for (double v : inc.first) a += v;
        for (double v : inc.second) b += v;
        REQUIRE(o.D_R <= 1.2);
        CHECK(o.D_R == doctest::Approx(std::abs(a - b)).epsilon(1e-12));
        CHECK(o.T_R == doctest::Approx(std::min(a, b)).epsilon(1e-12));
        CHECK(o.T_R_bar == doctest::Approx(b).epsilon(1e-12));
        CHECK(o.T_R <= o.T_R_bar);
        CHECK(o.steps == inc.first.size() + inc.second.size());
    }
}

TEST_CASE("step1: step cap aborts") {
    auto m = make_exponential(1.0);
    RngStream rng(1, 0);
    CHECK_THROWS_AS(step1_walk(m, 1e6, 0.5, rng, nullptr, 10), SimulationError);
}

TEST_CASE("step1: each copy receives i.i.d. inter-arrivals") {
    auto m = make_uniform(1.0, 2.0);
    std::vector<double> first, second;
    for (std::uint64_t i = 0; first.size() < 10000 || second.size() < 10000; ++i) {
        RngStream rng(11, i);
        Step1Increments inc;
        step1_walk(m, (i % 2 ? 1.0 : -1.0) * 9.0, 1.28, rng, &inc);
        first.insert(first.end(), inc.first.begin(), inc.first.end());
        second.insert(second.end(), inc.second.begin(), inc.second.end());
    }
    first.resize(10000);
    second.resize(10000);
    auto cdf = [&](double t) { return m.cdf(t); };
    CHECK(stats::ks_one_sample(first, cdf).p_value > 0.01);
    CHECK(stats::ks_one_sample(second, cdf).p_value > 0.01);
}

TEST_CASE("step1: exponential moments of the elapsed time") {
    auto m = make_exponential(1.0);
    const double beta = 0.5, lambda = 0.25, R = 3.0, x = 5.0;
    const std::uint64_t n = 20000;
    for (double lp : {lambda, lambda / 2, lambda / 4}) {
        std::vector<double> v(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream rng(3, i);
            v[i] = std::exp(lp * step1_walk(m, x, R, rng).T_R_bar);
        }
        const auto e = mean_of(v);
        CHECK(e.mean <= std::exp(lp * beta / lambda * x) + 3 * e.stderr_);
    }
}

TEST_CASE("step1: deterministic for a fixed stream") {
    auto m = make_folded_gaussian();
    RngStream a(5, 9), b(5, 9);
    const auto oa = step1_walk(m, 8.0, 1.0, a), ob = step1_walk(m, 8.0, 1.0, b);
    CHECK(oa.to_json() == ob.to_json());
}

TEST_CASE("step2: structural invariants") {
    auto m = make_uniform(1.0, 2.0);
    RngStream rng(2, 0);
    const auto zero = step2_attempt(m, kUniComp, 0.0, rng);
    CHECK(zero.success);
    CHECK(zero.M == 0.0);
    CHECK(zero.m == 0.0);
    CHECK(zero.I == 0);
    CHECK_THROWS_AS(step2_attempt(m, kUniComp, -1.0, rng), DomainError);

    for (double z : {0.3, 0.5, 1.0, 1.27}) {
        for (std::uint64_t i = 0; i < 2000; ++i) {
            RngStream r(4, i);
            const auto o = step2_attempt(m, kUniComp, z, r);
            CHECK(o.k == static_cast<long>(std::ceil(z / kUniComp.L)));
            CHECK(o.I <= o.k);
            CHECK(o.I >= 1);
            CHECK(o.m <= o.M);
            double lag = 0.0, lead = z;
            for (double v : o.lag_increments) lag += v;
            for (double v : o.lead_increments) {
                CHECK(v > 0.0);
                lead += v;
            }
            if (o.success) {
                CHECK(o.M == o.m);
                CHECK(o.I == o.k);
                CHECK(lead == doctest::Approx(lag).epsilon(1e-12));
            } else {
                CHECK(o.M == doctest::Approx(std::max(lag, lead)).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("step2: success frequency and conditional-max bounds") {
    auto m = make_uniform(1.0, 2.0);
    const double gamma = 0.2, eta = kUniComp.eta();
    const double Lbar = component_cond_max(m, kUniComp, gamma);
    const std::uint64_t n = 40000;
    for (double z : {0.3, 0.64, 1.28}) {
        const long k = static_cast<long>(std::ceil(z / kUniComp.L));
        const double shift = z + kUniComp.c * std::floor(z / kUniComp.L);
        std::vector<double> succ(n), all(n), fail(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream rng(6, i);
            const auto o = step2_attempt(m, kUniComp, z, rng);
            succ[i] = o.success;
            all[i] = std::exp(gamma * (o.M - shift));
            fail[i] = o.success ? 0.0 : all[i] / (1.0 - std::pow(eta, k));
        }
        const auto s = mean_of(succ), a = mean_of(all), f = mean_of(fail);
        CHECK(s.mean >= std::pow(eta, k) - 3 * s.stderr_);
        CHECK(a.mean <= Lbar + 3 * a.stderr_);
        CHECK(f.mean <= Lbar + 3 * f.stderr_);
    }
}

TEST_CASE("coupling: zero gap couples at time zero") {
    auto m = make_uniform(1.0, 2.0);
    RngStream rng(1, 0);
    const auto tr = run_coupling(m, kUniComp, kUniParams, 0.0, rng);
    CHECK(tr.T_star == 0.0);
    REQUIRE(tr.iterations.size() == 1);
    CHECK(tr.iterations[0].step2.success);
}

TEST_CASE("coupling: invalid certificate and bad input") {
    auto m = make_exponential(1.0);
    RngStream rng(1, 0);
    const BoundParams bad{0.1, 0.5, 0.05};
    CHECK_THROWS_AS(run_coupling(m, kExpComp, bad, 1.0, rng), InvalidCertificate);
    CHECK_THROWS_AS(run_coupling(m, kExpComp, kExpValid, -1.0, rng), DomainError);
    CouplingOptions opt;
    opt.max_iterations = 1;
    bool capped = false;
    for (std::uint64_t i = 0; i < 50 && !capped; ++i) {
        RngStream r(1, i);
        try {
            run_coupling(m, kExpComp, kExpValid, 5.0, r, opt);
        } catch (const SimulationError&) {
            capped = true;
        }
    }
    CHECK(capped);
}

TEST_CASE("coupling: time accounting and recorded epochs") {
    auto m = make_uniform(1.0, 2.0);
    const auto cert = assemble_certificate(m, kUniComp, kUniParams);
    CouplingOptions opt;
    opt.record_epochs = true;
    opt.horizon = 60.0;
    for (std::uint64_t i = 0; i < 300; ++i) {
        const double x = 0.37 * (i % 40);
        RngStream a(8, i), b(8, i);
        const auto tr = run_coupling(m, cert, x, a, opt);
        const auto plain = run_coupling(m, cert, x, b);
        CHECK(tr.T_star == plain.T_star);
        CHECK(tr.iterations.back().step2.success);
        CHECK(tr.T_star == doctest::Approx(tr.meeting_epoch).epsilon(1e-12));
        REQUIRE(std::is_sorted(tr.epochs_x.begin(), tr.epochs_x.end()));
        REQUIRE(std::is_sorted(tr.epochs_0.begin(), tr.epochs_0.end()));
        CHECK(tr.epochs_x.front() == x);
        CHECK(tr.epochs_0.front() == 0.0);
        CHECK(tr.epochs_x.back() > opt.horizon);
        const auto mx = std::find(tr.epochs_x.begin(), tr.epochs_x.end(), tr.meeting_epoch);
        const auto m0 = std::find(tr.epochs_0.begin(), tr.epochs_0.end(), tr.meeting_epoch);
        REQUIRE(mx != tr.epochs_x.end());
        REQUIRE(m0 != tr.epochs_0.end());
        CHECK(std::equal(mx, tr.epochs_x.end(), m0, tr.epochs_0.end()));
        for (auto e = tr.epochs_x.begin() + 1; e != tr.epochs_x.end(); ++e) CHECK(*e - *(e - 1) >= 1.0 - 1e-9);
    }
}

TEST_CASE("coupling: attempts dominated by a geometric count") {
    auto m = make_uniform(1.0, 2.0);
    const auto cert = assemble_certificate(m, kUniComp, kUniParams);
    const std::uint64_t n = 20000;
    std::vector<double> attempts(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        RngStream rng(9, i);
        attempts[i] = static_cast<double>(run_coupling(m, cert, 7.0, rng).iterations.size());
    }
    const auto e = mean_of(attempts);
    CHECK(e.mean <= std::pow(kUniComp.eta(), -cert.k_ceil) + 3 * e.stderr_);
}

TEST_CASE("tail: estimator properties") {
    auto m = make_uniform(1.0, 2.0);
    const auto cert = assemble_certificate(m, kUniComp, kUniParams);
    const double x = 5.0;
    auto grid = default_t_grid(x, 0.5, 16);
    CHECK(grid.size() == 16);
    CHECK(grid.front() == x);
    CHECK(grid.back() == doctest::Approx(x + 40.0));
    std::vector<double> early{0.0, 1.0, 2.0};
    early.insert(early.end(), grid.begin() + 1, grid.end());

    const auto a = estimate_tail(m, cert, x, early, 4000, 42);
    const auto b = estimate_tail(m, cert, x, early, 4000, 42, 3);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.samples == b.samples);
    CHECK(a.survival[0] == 1.0);
    for (std::size_t i = 0; i < early.size(); ++i) {
        if (i) CHECK(a.survival[i] <= a.survival[i - 1]);
        const double s = a.survival[i];
        CHECK(a.stderr_[i] == doctest::Approx(std::sqrt(s * (1 - s) / 4000.0)));
    }
    // Pick a point with survival near one half for the sqrt(n) scaling.
    std::size_t mid = 0;
    for (std::size_t i = 0; i < early.size(); ++i)
        if (std::abs(a.survival[i] - 0.5) < std::abs(a.survival[mid] - 0.5)) mid = i;
    const auto c = estimate_tail(m, cert, x, early, 8000, 43);
    CHECK(a.stderr_[mid] / c.stderr_[mid] == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));

    std::ostringstream os;
    a.write_csv(os);
    CHECK(os.str().rfind("t,survival,stderr\n", 0) == 0);

    CHECK_THROWS_AS(estimate_tail(m, cert, x, early, 50, 1), InvalidInput);
    const std::vector<double> unsorted{3.0, 2.0};
    CHECK_THROWS_AS(estimate_tail(m, cert, x, unsorted, 200, 1), InvalidInput);
}

TEST_CASE("tail: dominated by the certified bound") {
    auto m = make_uniform(1.0, 2.0);
    const auto cert = assemble_certificate(m, kUniComp, kUniParams);
    const std::uint64_t n = 20000;
    for (double x : {0.5, 3.0, 10.0}) {
        const auto grid = default_t_grid(x, 0.5, 16);
        const auto est = estimate_tail(m, cert, x, grid, n, 17);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double bound = std::min(1.0, theorem1_bound(cert, x, grid[i]));
            CHECK(est.exceed[i] <= stats::binomial_upper_quantile(n, bound, 0.99));
        }
    }
}

TEST_CASE("renewal: path basics") {
    auto m = make_exponential(1.0);
    RngStream rng(1, 0);
    const auto late = simulate_renewal(m, 7.0, 3.0, rng);
    CHECK(late.epochs.empty());
    CHECK(late.residual == 4.0);
    const auto p = simulate_renewal(m, 0.0, 50.0, rng);
    CHECK(p.epochs.front() == 0.0);
    CHECK(p.epochs.back() <= 50.0);
    CHECK(p.residual > 0.0);
    CHECK_THROWS_AS(simulate_renewal(m, -1.0, 3.0, rng), DomainError);
}

TEST_CASE("renewal: Poisson counts") {
    auto m = make_exponential(1.0);
    const double t = 10.0;
    std::vector<double> counts(20000);
    for (std::uint64_t i = 0; i < counts.size(); ++i) {
        RngStream rng(12, i);
        counts[i] = static_cast<double>(simulate_renewal(m, 0.0, t, rng).epochs.size()) - 1.0;
    }
    const auto e = mean_of(counts);
    CHECK(std::abs(e.mean - t) <= 3 * e.stderr_);

    for (double s : {0.5, 4.0, 20.0}) {
        const auto u = estimate_renewal_measure(m, DelaySpec::fixed(0.0), s, 1.0, 20000, 13);
        CHECK(std::abs(u.mean - 1.0) <= 3 * u.stderr_);
    }
    const auto tiny = estimate_renewal_measure(m, DelaySpec::fixed(0.0), 3.0, 1e-9, 2000, 13);
    CHECK(tiny.mean == 0.0);
    CHECK_THROWS_AS(estimate_renewal_measure(m, DelaySpec::fixed(0.0), 3.0, 0.0, 2000, 13), DomainError);
}

TEST_CASE("renewal: stationary delay is time invariant") {
    auto m = make_uniform(1.0, 2.0);
    const StationaryDelaySampler st(m);
    std::vector<double> at_t(10000), at_2t(10000);
    for (std::uint64_t i = 0; i < at_t.size(); ++i) {
        RngStream r1(14, i), r2(15, i);
        at_t[i] = simulate_renewal(m, st.sample(r1), 7.3, r1).residual;
        at_2t[i] = simulate_renewal(m, st.sample(r2), 14.6, r2).residual;
    }
    CHECK(stats::ks_two_sample(at_t, at_2t).p_value > 0.01);

    const std::vector<double> grid{0.0, 0.7, 3.1, 9.4};
    const auto a = estimate_renewal_curve(m, DelaySpec::equilibrium(), grid, 0.8, 20000, 16);
    const auto b = estimate_renewal_curve(m, DelaySpec::equilibrium(), grid, 0.8, 20000, 16, 4);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        CHECK(std::abs(a[j].mean - 0.8 / 1.5) <= 3 * a[j].stderr_);
        CHECK(a[j].mean == b[j].mean);
        CHECK(a[j].stderr_ == b[j].stderr_);
    }
}

TEST_CASE("tv: identical laws and the corollary bound") {
    auto m = make_uniform(1.0, 2.0);
    const auto cert = assemble_certificate(m, kUniComp, kUniParams);
    const auto zero = estimate_tv(m, cert, 0.0, 5.0, 20000, 0, 21);
    CHECK(zero.bins == 28);
    CHECK(std::abs(zero.tv_lower) <= 3 * zero.tv_lower_stderr);
    CHECK(zero.tv_upper == 0.0);
    CHECK_THROWS_AS(estimate_tv(m, cert, 0.0, 5.0, 2000, 1, 21), InvalidInput);

    double prev = 1.0;
    for (double t : {2.0, 4.0, 8.0, 16.0, 32.0}) {
        const auto e = estimate_tv(m, cert, 3.0, t, 20000, 0, 22);
        CHECK(e.tv_upper <= prev + 3 * e.tv_upper_stderr);
        prev = e.tv_upper;
        CHECK(e.tv_lower <= corollary_tv_bound(cert, cert.gamma, 3.0, t) + 3 * e.tv_lower_stderr);
        CHECK(e.tv_lower <= e.tv_upper + 3 * (e.tv_upper_stderr + e.tv_lower_stderr));
    }
    const auto a = estimate_tv(m, cert, 3.0, 4.0, 3000, 0, 23);
    const auto b = estimate_tv(m, cert, 3.0, 4.0, 3000, 0, 23, 2);
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("inequality5: Poisson oracle and vanishing event") {
    auto m = make_exponential(1.0);
    const auto cert = assemble_certificate(m, kExpComp, kExpValid);
    for (double t : {1.0, 10.0})
        for (double h : {0.5, 2.0}) {
            const auto r = check_inequality5(m, cert, 2.0, t, h, 3000, 31, h);
            CHECK(r.holds);
            CHECK(r.copy_x.rhs == doctest::Approx(r.p_exceed * (h + 1.0)));
        }
    const auto far = check_inequality5(m, cert, 2.0, 1e9, 1.0, 300, 32, 1.0);
    CHECK(far.p_exceed == 0.0);
    CHECK(far.copy_x.lhs == 0.0);
    CHECK(far.copy_0.rhs == 0.0);
}

TEST_CASE("inequality5: uniform model with simulated U0") {
    auto m = make_uniform(1.0, 2.0);
    const auto cert = assemble_certificate(m, kUniComp, kUniParams);
    for (double t : {2.0, 6.0, 12.0})
        for (double h : {0.5, 1.5}) {
            const auto r = check_inequality5(m, cert, 4.0, t, h, 4000, 33);
            CHECK(r.U0_simulated);
            CHECK(r.holds);
        }
}

TEST_CASE("supermartingale: drift inequality") {
    auto m = make_exponential(1.0);
    const std::vector<int> ns{0, 1, 2, 5, 10, 20};
    const auto r = check_supermartingale(m, 0.5, 0.25, 3.0, 5.0, ns, 20000, 41);
    CHECK(r.holds);
    CHECK(r.M0 == doctest::Approx(std::exp(2.5)).epsilon(1e-15));
    CHECK(r.rows[0].mean == doctest::Approx(r.M0).epsilon(1e-12));
    CHECK(r.rows[0].stderr_ < 1e-10);
    CHECK(r.rho == doctest::Approx(drift_factor(m, 0.5, 0.25, 3.0)));
    CHECK(r.to_json() == check_supermartingale(m, 0.5, 0.25, 3.0, 5.0, ns, 20000, 41, 3).to_json());

    // Threshold beyond the start: the walk never moves.
    const auto still = check_supermartingale(m, 0.5, 0.0, 1e6, 5.0, ns, 2000, 42);
    CHECK(still.holds);
    CHECK(still.rho == doctest::Approx(1.0 / 1.5).epsilon(1e-9));
    for (const auto& row : still.rows) CHECK(row.mean == doctest::Approx(still.M0).epsilon(1e-12));

    const auto nolam = check_supermartingale(m, 0.5, 0.0, 3.0, 8.0, ns, 20000, 43);
    CHECK(nolam.holds);
    CHECK(nolam.rows.back().mean < nolam.M0);
}

TEST_CASE("fit: exponential regression") {
    std::vector<double> t, v;
    for (int i = 0; i < 20; ++i) {
        t.push_back(0.5 * i);
        v.push_back(2.0 * std::exp(-0.3 * 0.5 * i));
    }
    const auto exact = fit_exponential_rate(t, v);
    CHECK(exact.amplitude == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(exact.rate == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(exact.residual < 1e-9);

    RngStream rng(51, 0);
    std::vector<double> noisy(v);
    for (double& y : noisy) y *= 1.0 + 0.01 * rng.normal();
    CHECK(fit_exponential_rate(t, noisy).rate == doctest::Approx(0.3).epsilon(0.05));

    const std::vector<double> flat(t.size(), 4.0);
    CHECK(std::abs(fit_exponential_rate(t, flat).rate) < 1e-9);

    std::vector<double> holes(v);
    holes[3] = 0.0;
    holes[7] = -1.0;
    const auto d = fit_exponential_rate(t, holes);
    CHECK(d.dropped == 2);
    CHECK(d.used == 18);
    CHECK(d.rate == doctest::Approx(0.3).epsilon(1e-9));

    const std::vector<double> t3{1.0, 2.0, 3.0}, few{1.0, -1.0, 0.5};
    CHECK_THROWS_AS(fit_exponential_rate(t3, few), InvalidInput);
    const std::vector<double> t2{1.0, 2.0};
    CHECK_THROWS_AS(fit_exponential_rate(t2, few), InvalidInput);
}
