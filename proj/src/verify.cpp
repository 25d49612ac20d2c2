#include "renewal/verify.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "renewal/error.hpp"
#include "renewal/sim.hpp"
#include "renewal/stats.hpp"

namespace renewal {

namespace {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t check) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (check + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
    const InterArrivalModel& model;
    const BoundCertificate& cert;
    const VerifyOptions& opt;
};

// Starting gaps beyond the walk threshold, so that the walk actually runs.
std::vector<double> walk_starts(const Context& cx) {
    std::vector<double> xs;
    for (double x : cx.opt.x)
        if (x > cx.cert.R) xs.push_back(x);
    if (xs.empty()) xs.push_back(2.0 * cx.cert.R + cx.model.mean());
    return xs;
}

CheckResult walk_moments(const Context& cx) {
    CheckResult r{"walk_moments", true, json::array()};
    const auto& p = cx.cert.params;
    const double lambda = p.lambda();
    if (!(lambda > 0.0) || !(cx.cert.R > 0.0)) {
        r.detail = {{"skipped", "lambda or R is zero"}};
        return r;
    }
    const std::uint64_t seed = derive_seed(cx.opt.seed, 1);
    for (double x : walk_starts(cx)) {
        std::vector<double> tbar(cx.opt.replicas);
        detail::parallel_for(cx.opt.replicas, cx.opt.threads, [&](std::uint64_t i) {
            RngStream rng(seed, i);
            tbar[i] = step1_walk(cx.model, x, cx.cert.R, rng).T_R_bar;
        });
        for (double frac : {1.0, 0.5, 0.25}) {
            const double lp = frac * lambda;
            std::vector<double> v(tbar.size());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(lp * tbar[i]);
            const auto e = stats::mean_estimate(v);
            const double bound = std::exp(lp * p.beta / lambda * x);
            const bool ok = e.mean <= bound + 3.0 * e.stderr_;
            r.passed = r.passed && ok;
            r.detail.push_back({{"x", x}, {"lambda", lp}, {"mean", e.mean}, {"stderr", e.stderr_}, {"bound", bound}, {"holds", ok}});
        }
    }
    return r;
}

CheckResult supermartingale(const Context& cx) {
    CheckResult r{"supermartingale", true, json::array()};
    if (!(cx.cert.R > 0.0)) {
        r.detail = {{"skipped", "R is zero"}};
        return r;
    }
    const auto& p = cx.cert.params;
    for (double x : walk_starts(cx)) {
        const auto s = check_supermartingale(cx.model, p.beta, p.lambda(), cx.cert.R, x, {1, 2, 5, 10, 20},
                                             cx.opt.replicas, derive_seed(cx.opt.seed, 2), cx.opt.threads);
        r.passed = r.passed && s.holds;
        auto j = s.to_json();
        j["x"] = x;
        r.detail.push_back(j);
    }
    return r;
}

CheckResult coupling_attempt(const Context& cx) {
    CheckResult r{"coupling_attempt", true, json::array()};
    const auto& comp = cx.cert.comp;
    const double gamma = cx.cert.params.theta * cx.cert.params.beta;
    const double Lbar = cx.cert.cond_max;
    const double R = cx.cert.R > 0.0 ? cx.cert.R : comp.L;
    const std::uint64_t seed = derive_seed(cx.opt.seed, 3), n = cx.opt.replicas;
    for (double frac : {0.1, 0.5, 1.0}) {
        const double z = frac * R;
        const long k = static_cast<long>(std::ceil(z / comp.L));
        const double eta_k = std::pow(comp.eta(), k);
        const double offset = z + comp.c * std::floor(z / comp.L);
        std::vector<double> succ(n), all(n), fail(n);
        detail::parallel_for(n, cx.opt.threads, [&](std::uint64_t i) {
            RngStream rng(seed, i);
            const auto o = step2_attempt(cx.model, comp, z, rng);
            succ[i] = o.success ? 1.0 : 0.0;
            all[i] = std::exp(gamma * (o.M - offset));
            fail[i] = o.success ? 0.0 : all[i] / (1.0 - eta_k);
        });
        const auto s = stats::mean_estimate(succ), a = stats::mean_estimate(all), f = stats::mean_estimate(fail);
        const bool ok_s = s.mean >= eta_k - 3.0 * s.stderr_;
        const bool ok_a = a.mean <= Lbar + 3.0 * a.stderr_;
        const bool ok_f = f.mean <= Lbar + 3.0 * f.stderr_;
        r.passed = r.passed && ok_s && ok_a && ok_f;
        r.detail.push_back({{"z", z},
                            {"k", k},
                            {"success", s.mean},
                            {"success_floor", eta_k},
                            {"max_moment", a.mean},
                            {"max_moment_on_failure", f.mean},
                            {"cond_max", Lbar},
                            {"holds", ok_s && ok_a && ok_f}});
    }
    return r;
}

CheckResult tail_domination(const Context& cx) {
    CheckResult r{"tail_domination", true, json::array()};
    const std::uint64_t n = cx.opt.replicas;
    for (double x : cx.opt.x) {
        const auto grid = default_t_grid(x, cx.cert.rate, cx.opt.t_points);
        const auto est = estimate_tail(cx.model, cx.cert, x, grid, n, derive_seed(cx.opt.seed, 4), cx.opt.threads);
        int violations = 0;
        double worst = -kInf;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double bound = std::min(1.0, theorem1_bound(cx.cert, x, grid[i]));
            const auto limit = stats::binomial_upper_quantile(n, bound, 0.99);
            if (est.exceed[i] > limit) ++violations;
            worst = std::max(worst, est.survival[i] - bound);
        }
        r.passed = r.passed && violations == 0;
        r.detail.push_back({{"x", x}, {"points", grid.size()}, {"violations", violations}, {"max_excess", worst}});
    }
    return r;
}

CheckResult total_variation(const Context& cx) {
    CheckResult r{"total_variation", true, json::array()};
    const double mu = cx.model.mean();
    for (double x : cx.opt.x)
        for (double k : {1.0, 4.0, 16.0}) {
            const double t = x + k * mu;
            const auto e = estimate_tv(cx.model, cx.cert, x, t, cx.opt.replicas, 0, derive_seed(cx.opt.seed, 5),
                                       cx.opt.threads);
            const double bound = corollary_tv_bound(cx.cert, cx.cert.gamma, x, t);
            const bool ok = e.tv_lower <= bound + 3.0 * e.tv_lower_stderr;
            r.passed = r.passed && ok;
            auto j = e.to_json();
            j["x"] = x;
            j["t"] = t;
            j["bound"] = num(bound);
            j["holds"] = ok;
            r.detail.push_back(j);
        }
    return r;
}

CheckResult renewal_window(const Context& cx) {
    CheckResult r{"renewal_window", true, json::array()};
    const double mu = cx.model.mean();
    const auto d = cx.model.describe();
    const bool poisson = d.at("kind") == "exponential";
    const double x = cx.opt.x.back();
    for (double kt : {1.0, 4.0})
        for (double kh : {0.5, 2.0}) {
            const double t = x + kt * mu, h = kh * mu;
            std::optional<double> U0;
            if (poisson) U0 = h / mu;
            const auto res = check_inequality5(cx.model, cx.cert, x, t, h, cx.opt.replicas,
                                               derive_seed(cx.opt.seed, 6), U0, cx.opt.threads);
            r.passed = r.passed && res.holds;
            auto j = res.to_json();
            j["x"] = x;
            r.detail.push_back(j);
        }
    return r;
}

CheckResult marginals(const Context& cx) {
    CheckResult r{"marginals", true, json::object()};
    const std::size_t n = 10000;
    const std::uint64_t seed = derive_seed(cx.opt.seed, 7);
    auto cdf = [&](double t) { return cx.model.cdf(t); };

    std::vector<double> first, second;
    const double R = cx.cert.R > 0.0 ? cx.cert.R : cx.model.mean();
    const double x = 4.0 * R + 4.0 * cx.model.mean();
    for (std::uint64_t i = 0; first.size() < n || second.size() < n; ++i) {
        RngStream rng(seed, i);
        Step1Increments inc;
        step1_walk(cx.model, (i % 2 ? 1.0 : -1.0) * x, R, rng, &inc);
        first.insert(first.end(), inc.first.begin(), inc.first.end());
        second.insert(second.end(), inc.second.begin(), inc.second.end());
    }
    first.resize(n);
    second.resize(n);

    std::vector<double> split_a(n), split_b(n);
    RngStream rng(seed, std::uint64_t{1} << 40);
    for (std::size_t i = 0; i < n; ++i) {
        const double shift = cx.cert.comp.L * static_cast<double>(i % 5) / 4.0;
        const auto pr = split_pair(cx.model, cx.cert.comp, shift, rng);
        split_a[i] = pr.first;
        split_b[i] = pr.second;
    }
    const std::pair<const char*, std::vector<double>*> samples[] = {
        {"walk_first", &first}, {"walk_second", &second}, {"split_first", &split_a}, {"split_second", &split_b}};
    for (const auto& [name, v] : samples) {
        const auto ks = stats::ks_one_sample(*v, cdf);
        const bool ok = ks.p_value > 0.01;
        r.passed = r.passed && ok;
        r.detail[name] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}, {"holds", ok}};
    }
    return r;
}

CheckResult geometric_sum(const Context& cx) {
    CheckResult r{"geometric_sum", true, json::object()};
    double worst = 0.0;
    for (double p : {0.05, 0.3, 0.5, 0.9})
        for (double frac : {-2.0, -0.5, 0.1, 0.5, 0.9}) {
            const double psi = frac * -std::log1p(-p);
            long double sum = 0.0L, term = p * std::exp(static_cast<long double>(psi));
            const long double ratio = (1.0L - p) * std::exp(static_cast<long double>(psi));
            for (int k = 0; k < 100000 && term > 1e-30L * sum; ++k) {
                sum += term;
                term *= ratio;
            }
            const double v = geometric_sum_bound({p, psi});
            worst = std::max(worst, std::abs(v - static_cast<double>(sum)) / static_cast<double>(sum));
        }
    const bool series_ok = worst <= 1e-12;

    // Geometric number of Exp(1) summands: E exp(lam S) equals the bound.
    const double p = 0.5, lam = 0.1;
    const double bound = geometric_sum_bound({p, -std::log1p(-lam)});
    const std::uint64_t n = cx.opt.replicas, seed = derive_seed(cx.opt.seed, 8);
    std::vector<double> v(n);
    detail::parallel_for(n, cx.opt.threads, [&](std::uint64_t i) {
        RngStream rng(seed, i);
        const auto g = rng.geometric(p);
        double s = 0.0;
        for (std::uint64_t j = 0; j < g; ++j) s += rng.exponential(1.0);
        v[i] = std::exp(lam * s);
    });
    const auto e = stats::mean_estimate(v);
    const bool sharp_ok = std::abs(e.mean - bound) <= 3.0 * e.stderr_;
    r.passed = series_ok && sharp_ok;
    r.detail = {{"series_max_rel_error", worst},
                {"series_holds", series_ok},
                {"sharpness_mean", e.mean},
                {"sharpness_stderr", e.stderr_},
                {"sharpness_bound", bound},
                {"sharpness_holds", sharp_ok}};
    return r;
}

}  // namespace

nlohmann::json VerifyReport::to_json() const {
    json cs = json::array();
    for (const auto& c : checks) cs.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return {{"passed", passed}, {"checks", cs}};
}

VerifyReport run_verification(const InterArrivalModel& model, const BoundCertificate& cert,
                              const VerifyOptions& options) {
    if (!cert.valid) throw InvalidCertificate("verification needs a valid certificate");
    if (cert.degenerate) throw DomainError("verification needs a decaying bound (delta > 0)");
    if (options.x.empty()) throw InvalidInput("verification needs at least one delay x");
    if (options.replicas < 100) throw InvalidInput("verification needs at least 100 replicas");
    const Context cx{model, cert, options};
    VerifyReport rep;
    using Check = CheckResult (*)(const Context&);
    for (Check check : {walk_moments, supermartingale, coupling_attempt, tail_domination, total_variation,
                        renewal_window, marginals, geometric_sum}) {
        rep.checks.push_back(check(cx));
        spdlog::info("check {}: {}", rep.checks.back().name, rep.checks.back().passed ? "pass" : "FAIL");
    }
    rep.passed = std::all_of(rep.checks.begin(), rep.checks.end(), [](const auto& c) { return c.passed; });
    return rep;
}

}  // namespace renewal
