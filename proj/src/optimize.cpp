#include "renewal/optimize.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "renewal/error.hpp"

namespace renewal {

nlohmann::json SearchSpace::to_json() const {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : components) comps.push_back(c.to_json());
    return {
        {"beta", {beta.lo, beta.hi}},
        {"delta", {delta.lo, delta.hi}},
        {"theta", {theta.lo, theta.hi}},
        {"grid", {beta_points, delta_points, theta_points}},
        {"refine_top", refine_top},
        {"components", comps},
    };
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(std::max(n, 0)));
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    if (n > 1) v.back() = hi;
    return v;
}

std::vector<double> logspace(double lo, double hi, int n) {
    auto v = linspace(std::log(lo), std::log(hi), n);
    for (double& x : v) x = std::exp(x);
    if (n >= 1) v.front() = lo;
    if (n > 1) v.back() = hi;
    return v;
}

std::vector<UniformComponent> enumerate_components(const InterArrivalModel& model,
                                                   const ComponentGrid& grid, int grid_points) {
    std::vector<UniformComponent> out;
    for (double c : grid.c)
        for (double L : grid.L)
            for (double e : grid.eta_tilde) {
                if (!(c >= L && L > 0.0 && e > 0.0 && e < 1.0)) continue;
                const UniformComponent comp{c, L, e};
                if (verify_uniform_component(model, comp, grid_points) >= 0.0) out.push_back(comp);
            }
    return out;
}

double rate_objective(const InterArrivalModel& model, const UniformComponent& comp,
                      const BoundParams& params) {
    try {
        const auto cert = assemble_certificate(model, comp, params);
        return cert.valid ? cert.rate : -kInf;
    } catch (const DomainError&) {
        return -kInf;
    } catch (const QuadratureError&) {
        return -kInf;
    }
}

nlohmann::json OptimizeResult::to_json() const {
    nlohmann::json j = {
        {"feasible", feasible},
        {"evaluations", evaluations},
        {"best_grid_objective", std::isfinite(best_grid_objective) ? nlohmann::json(best_grid_objective)
                                                                   : nlohmann::json(nullptr)},
    };
    if (feasible) {
        j["params"] = params.to_json();
        j["component"] = comp.to_json();
        j["rate"] = params.rate();
        j["certificate"] = cert->to_json();
    } else {
        j["best_q"] = best_q;
    }
    return j;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool better(const GridPoint& a, const GridPoint& b) {
    if (a.objective != b.objective) return a.objective > b.objective;
    if (a.params.beta != b.params.beta) return a.params.beta < b.params.beta;
    if (a.params.delta != b.params.delta) return a.params.delta < b.params.delta;
    if (a.params.theta != b.params.theta) return a.params.theta < b.params.theta;
    return a.component < b.component;
}

double safe_R_raw(const InterArrivalModel& model, double beta, double delta) {
    try {
        return compute_R_raw(model, {beta, delta, 1.0});
    } catch (const DomainError&) {
        return kNaN;
    }
}

double safe_cond_max(const InterArrivalModel& model, const UniformComponent& comp, double g) {
    try {
        return component_cond_max(model, comp, g);
    } catch (const QuadratureError&) {
        return kInf;
    }
}

// q, or +inf when the certificate cannot be formed.
double q_of(double R_raw, const UniformComponent& comp, double theta_beta, double cond) {
    if (std::isnan(R_raw)) return kInf;
    const auto t = cycle_terms(R_raw, comp, theta_beta, cond);
    if (!std::isfinite(t.cycle_cost)) return kInf;
    return t.q;
}

// Largest feasible theta in [lo, hi] for fixed (beta, delta); q is nondecreasing in theta.
struct Profile {
    double theta = 0.0;
    double objective = -kInf;
    std::size_t evaluations = 0;
};

Profile profile_theta(const InterArrivalModel& model, const UniformComponent& comp, double beta,
                      double delta, Range theta, double R_raw) {
    Profile p;
    if (std::isnan(R_raw)) return p;
    auto feasible = [&](double th) {
        ++p.evaluations;
        return q_of(R_raw, comp, th * beta, safe_cond_max(model, comp, th * beta)) < 1.0;
    };
    double lo = theta.lo, hi = theta.hi;
    if (feasible(hi)) {
        lo = hi;
    } else {
        if (!feasible(lo)) return p;
        while (hi - lo > 1e-12 * hi) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
    }
    p.theta = lo;
    p.objective = lo * delta * beta;
    return p;
}

Profile profile_theta(const InterArrivalModel& model, const UniformComponent& comp, double beta,
                      double delta, Range theta) {
    return profile_theta(model, comp, beta, delta, theta, safe_R_raw(model, beta, delta));
}

struct ComponentScan {
    std::vector<GridPoint> top;
    std::vector<GridPoint> all;
    double min_q = kInf;
    double best_grid = -kInf;
    std::size_t evaluations = 0;
};

ComponentScan scan_component(const InterArrivalModel& model, const UniformComponent& comp,
                             std::size_t index, const std::vector<double>& betas,
                             const std::vector<double>& deltas, const std::vector<double>& thetas,
                             const std::vector<double>& R_table, int keep, bool record) {
    ComponentScan scan;
    for (std::size_t ib = 0; ib < betas.size(); ++ib) {
        std::vector<double> cond(thetas.size());
        for (std::size_t it = 0; it < thetas.size(); ++it)
            cond[it] = safe_cond_max(model, comp, thetas[it] * betas[ib]);
        for (std::size_t id = 0; id < deltas.size(); ++id) {
            const double R_raw = R_table[ib * deltas.size() + id];
            for (std::size_t it = 0; it < thetas.size(); ++it) {
                GridPoint g;
                g.params = {betas[ib], deltas[id], thetas[it]};
                g.component = index;
                g.q = q_of(R_raw, comp, thetas[it] * betas[ib], cond[it]);
                g.objective = g.q < 1.0 ? g.params.rate() : -kInf;
                ++scan.evaluations;
                scan.min_q = std::min(scan.min_q, g.q);
                if (record) scan.all.push_back(g);
            }
            // Feasible grid thetas form a prefix; profile theta inside the bracket it leaves.
            std::size_t n_ok = 0;
            while (n_ok < thetas.size() &&
                   q_of(R_raw, comp, thetas[n_ok] * betas[ib], cond[n_ok]) < 1.0)
                ++n_ok;
            if (n_ok == 0) continue;
            const Range bracket{thetas[n_ok - 1], n_ok < thetas.size() ? thetas[n_ok] : thetas.back()};
            const auto pr = profile_theta(model, comp, betas[ib], deltas[id], bracket, R_raw);
            scan.evaluations += pr.evaluations;
            GridPoint g{{betas[ib], deltas[id], pr.theta}, index, kNaN, pr.objective};
            scan.best_grid = std::max(scan.best_grid, thetas[n_ok - 1] * deltas[id] * betas[ib]);
            auto pos = std::lower_bound(scan.top.begin(), scan.top.end(), g, better);
            if (static_cast<int>(pos - scan.top.begin()) < keep) {
                scan.top.insert(pos, g);
                if (static_cast<int>(scan.top.size()) > keep) scan.top.pop_back();
            }
        }
    }
    return scan;
}

// Nelder-Mead on (log beta, delta) with theta profiled out; maximises.
GridPoint refine(const InterArrivalModel& model, const SearchSpace& space, double beta_hi,
                 const UniformComponent& comp, const GridPoint& start, double step_logb,
                 double step_delta, int budget, std::size_t& evaluations) {
    const std::array<double, 2> lo{std::log(space.beta.lo), space.delta.lo};
    const std::array<double, 2> hi{std::log(beta_hi), space.delta.hi};
    GridPoint best = start;

    auto eval = [&](const std::array<double, 2>& u) {
        for (int d = 0; d < 2; ++d)
            if (u[d] < lo[d] || u[d] > hi[d]) return -kInf;
        const double beta = std::exp(u[0]);
        const auto pr = profile_theta(model, comp, beta, u[1], space.theta);
        evaluations += pr.evaluations;
        if (pr.objective > -kInf) {
            GridPoint g{{beta, u[1], pr.theta}, start.component, kNaN, pr.objective};
            if (better(g, best)) best = g;
        }
        return pr.objective;
    };

    std::array<std::array<double, 2>, 3> x;
    x[0] = {std::log(start.params.beta), start.params.delta};
    const std::array<double, 2> step{step_logb, step_delta};
    std::array<bool, 2> active{};
    for (int d = 0; d < 2; ++d) {
        x[d + 1] = x[0];
        active[d] = hi[d] > lo[d] && step[d] > 0.0;
        if (!active[d]) continue;
        double s = step[d];
        if (x[0][d] + s > hi[d]) s = -s;
        x[d + 1][d] += s;
    }
    std::array<double, 3> f{};
    f[0] = eval(x[0]);
    if (!active[0] && !active[1]) return best;
    for (int i = 1; i < 3; ++i) f[i] = active[i - 1] ? eval(x[i]) : -kInf;

    int used = 3;
    while (used < budget) {
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] > f[b]; });
        const int b = order[0], m = order[1], w = order[2];
        double size = 0.0;
        for (int d = 0; d < 2; ++d)
            size = std::max({size, std::abs(x[m][d] - x[b][d]), std::abs(x[w][d] - x[b][d])});
        if (size < 1e-10) break;

        std::array<double, 2> centroid{}, xr{}, xe{}, xc{};
        for (int d = 0; d < 2; ++d) centroid[d] = 0.5 * (x[b][d] + x[m][d]);
        for (int d = 0; d < 2; ++d) xr[d] = centroid[d] + (centroid[d] - x[w][d]);
        const double fr = eval(xr);
        ++used;
        if (fr > f[b]) {
            for (int d = 0; d < 2; ++d) xe[d] = centroid[d] + 2.0 * (centroid[d] - x[w][d]);
            const double fe = eval(xe);
            ++used;
            if (fe > fr) {
                x[w] = xe;
                f[w] = fe;
            } else {
                x[w] = xr;
                f[w] = fr;
            }
            continue;
        }
        if (fr > f[m]) {
            x[w] = xr;
            f[w] = fr;
            continue;
        }
        const bool outside = fr > f[w];
        for (int d = 0; d < 2; ++d)
            xc[d] = outside ? centroid[d] + 0.5 * (xr[d] - centroid[d])
                            : centroid[d] + 0.5 * (x[w][d] - centroid[d]);
        const double fc = eval(xc);
        ++used;
        if (fc > (outside ? fr : f[w])) {
            x[w] = xc;
            f[w] = fc;
            continue;
        }
        for (int i : {m, w}) {
            for (int d = 0; d < 2; ++d) x[i][d] = x[b][d] + 0.5 * (x[i][d] - x[b][d]);
            f[i] = eval(x[i]);
            ++used;
        }
    }
    return best;
}

void check_space(const SearchSpace& s, double beta_hi) {
    if (s.components.empty()) throw InvalidInput("search space has no component candidates");
    if (!(s.beta.lo > 0.0 && s.beta.lo <= beta_hi)) throw InvalidInput("beta range must satisfy 0 < lo <= hi");
    if (!(s.delta.lo >= 0.0 && s.delta.lo <= s.delta.hi && s.delta.hi < 1.0))
        throw InvalidInput("delta range must lie in [0, 1)");
    if (!(s.theta.lo > 0.0 && s.theta.lo <= s.theta.hi && s.theta.hi <= 1.0))
        throw InvalidInput("theta range must lie in (0, 1]");
    if (s.beta_points < 1 || s.delta_points < 1 || s.theta_points < 1)
        throw InvalidInput("grid resolutions must be positive");
}

}  // namespace

OptimizeResult optimize_rate(const InterArrivalModel& model, const SearchSpace& space,
                             const OptimizeOptions& options) {
    const double beta_hi = space.beta.hi > 0.0 ? space.beta.hi : model.alpha();
    check_space(space, beta_hi);
    for (const auto& c : space.components) c.validate();

    const auto betas = logspace(space.beta.lo, beta_hi, space.beta_points);
    const auto deltas = linspace(space.delta.lo, space.delta.hi, space.delta_points);
    const auto thetas = linspace(space.theta.lo, space.theta.hi, space.theta_points);
    std::vector<double> R_table(betas.size() * deltas.size());
    for (std::size_t ib = 0; ib < betas.size(); ++ib)
        for (std::size_t id = 0; id < deltas.size(); ++id)
            R_table[ib * deltas.size() + id] = safe_R_raw(model, betas[ib], deltas[id]);

    const int keep = std::max(space.refine_top, 1);
    std::vector<ComponentScan> scans(space.components.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scans.size(); i = next++)
            scans[i] = scan_component(model, space.components[i], i, betas, deltas, thetas, R_table,
                                      keep, options.record_grid);
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(options.threads, scans.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    OptimizeResult result;
    result.best_q = kInf;
    std::vector<GridPoint> top;
    for (auto& s : scans) {
        result.evaluations += s.evaluations;
        result.best_q = std::min(result.best_q, s.min_q);
        top.insert(top.end(), s.top.begin(), s.top.end());
        if (options.record_grid) result.grid.insert(result.grid.end(), s.all.begin(), s.all.end());
    }
    std::sort(top.begin(), top.end(), better);
    result.best_grid_objective = -kInf;
    for (const auto& s : scans) result.best_grid_objective = std::max(result.best_grid_objective, s.best_grid);
    if (top.empty()) return result;

    const double step_logb =
        betas.size() > 1 ? (std::log(beta_hi) - std::log(space.beta.lo)) / (betas.size() - 1) : 0.0;
    const double step_delta =
        deltas.size() > 1 ? (space.delta.hi - space.delta.lo) / (deltas.size() - 1) : 0.0;

    GridPoint best = top.front();
    const std::size_t n_refine = std::min<std::size_t>(space.refine_top, top.size());
    for (std::size_t i = 0; i < n_refine; ++i) {
        const auto& comp = space.components[top[i].component];
        const auto r = refine(model, space, beta_hi, comp, top[i], step_logb, step_delta,
                              options.budget, result.evaluations);
        if (better(r, best)) best = r;
    }

    result.params = best.params;
    result.comp = space.components[best.component];
    result.cert = assemble_certificate(model, result.comp, result.params);
    result.feasible = result.cert->valid;
    if (!result.feasible) throw std::logic_error("optimizer returned an invalid certificate");
    return result;
}

}  // namespace renewal
