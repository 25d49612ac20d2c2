#include "renewal/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "renewal/error.hpp"

namespace renewal {

namespace {

// Stream namespaces so that one estimator can draw several independent replica families.
constexpr std::uint64_t kFamily = std::uint64_t{1} << 40;

std::uint64_t stream_of(std::uint64_t family, std::uint64_t replica) { return family * kFamily + replica; }

nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

void check_grid(const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw InvalidInput("t grid is empty");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw InvalidInput("t grid must be strictly increasing");
}

}  // namespace

nlohmann::json Step1Outcome::to_json() const {
    return {{"T_R", T_R}, {"T_R_bar", T_R_bar}, {"D_R", D_R}, {"Y_end", Y_end}, {"steps", steps}};
}

nlohmann::json Step2Outcome::to_json() const {
    return {{"success", success}, {"z", z}, {"M", M}, {"m", m}, {"I", I}, {"k", k}};
}

nlohmann::json CouplingTrace::to_json() const {
    nlohmann::json its = nlohmann::json::array();
    for (const auto& it : iterations) its.push_back({{"step1", it.step1.to_json()}, {"step2", it.step2.to_json()}});
    return {{"x0", x0}, {"R", R}, {"T_star", T_star}, {"meeting_epoch", meeting_epoch}, {"iterations", its}};
}

Step1Outcome step1_walk(const InterArrivalModel& model, double x, double R, RngStream& rng,
                        Step1Increments* increments, std::uint64_t max_steps) {
    if (!(R > 0.0)) throw DomainError("walk threshold R must be positive");
    Step1Outcome out;
    if (std::abs(x) <= R) {
        out.D_R = std::abs(x);
        out.Y_end = x;
        return out;
    }
    double Y = x, to_second = 0.0;
    while (std::abs(Y) > R) {
        if (out.steps >= max_steps) {
            std::ostringstream os;
            os << "walk exceeded " << max_steps << " steps (x=" << x << ", R=" << R << ", Y=" << Y << ")";
            throw SimulationError(os.str());
        }
        const double X = model.sample(rng);
        if (Y >= 0.0) {
            Y -= X;
            to_second += X;
            if (increments) increments->second.push_back(X);
        } else {
            Y += X;
            if (increments) increments->first.push_back(X);
        }
        ++out.steps;
    }
    out.T_R_bar = to_second;
    out.T_R = to_second + (Y < 0.0 ? Y : 0.0);
    out.D_R = std::abs(Y);
    out.Y_end = Y;
    return out;
}

Step2Outcome step2_attempt(const InterArrivalModel& model, const UniformComponent& comp, double z,
                           RngStream& rng) {
    if (!(z >= 0.0)) throw DomainError("relative delay z must be nonnegative");
    Step2Outcome out;
    out.z = z;
    if (z == 0.0) {
        out.success = true;
        return out;
    }
    const double L = comp.L, eta = comp.eta();
    out.k = static_cast<long>(std::ceil(z / L));
    double lag = 0.0, lead = 0.0;
    bool failed = false;
    for (long i = 1; i <= out.k; ++i) {
        // The last shift completes the total to exactly z, also when z is a multiple of L.
        const double shift = i < out.k ? L : z - L * static_cast<double>(out.k - 1);
        double x1, x2;
        if (rng.bernoulli(eta)) {
            const double u = rng.uniform(comp.c, comp.c + L);
            x1 = u;
            x2 = u - shift;
        } else {
            x1 = sample_residual(model, comp, 0.0, rng);
            x2 = sample_residual(model, comp, shift, rng) - shift;
            failed = true;
        }
        out.lag_increments.push_back(x1);
        out.lead_increments.push_back(x2);
        lag += x1;
        lead += x2;
        out.I = i;
        if (failed) break;
    }
    out.success = !failed;
    if (out.success) {
        out.M = out.m = lag;
    } else {
        out.M = std::max(lag, z + lead);
        out.m = std::min(lag, z + lead);
    }
    return out;
}

CouplingTrace run_coupling(const InterArrivalModel& model, const BoundCertificate& cert, double x,
                           RngStream& rng, const CouplingOptions& options) {
    if (!cert.valid) throw InvalidCertificate("coupling needs a certificate with q < 1");
    if (!(x >= 0.0)) throw DomainError("initial delay x must be nonnegative");
    if (!(cert.R > 0.0)) throw DomainError("coupling needs R > 0");

    CouplingTrace trace;
    trace.x0 = x;
    trace.R = cert.R;
    const bool rec = options.record_epochs;
    if (rec) {
        trace.epochs_x = {x};
        trace.epochs_0 = {0.0};
    }
    double pos_x = x, pos_0 = 0.0, acc = 0.0;
    Step1Increments inc;

    for (std::uint64_t iter = 0;; ++iter) {
        if (iter >= options.max_iterations) {
            std::ostringstream os;
            os << "coupling did not succeed within " << options.max_iterations << " iterations (x=" << x << ")";
            throw SimulationError(os.str());
        }
        // The walk's first copy is the one ahead; ties extend the other copy.
        const bool x_leads = pos_x >= pos_0;
        double& lead = x_leads ? pos_x : pos_0;
        double& lag = x_leads ? pos_0 : pos_x;
        std::vector<double>* lead_ep = rec ? (x_leads ? &trace.epochs_x : &trace.epochs_0) : nullptr;
        std::vector<double>* lag_ep = rec ? (x_leads ? &trace.epochs_0 : &trace.epochs_x) : nullptr;

        CouplingIteration it;
        inc.first.clear();
        inc.second.clear();
        it.step1 = step1_walk(model, lead - lag, cert.R, rng, &inc, options.max_walk_steps);
        for (double v : inc.first) {
            lead += v;
            if (lead_ep) lead_ep->push_back(lead);
        }
        for (double v : inc.second) {
            lag += v;
            if (lag_ep) lag_ep->push_back(lag);
        }

        const bool x_behind = pos_x < pos_0;
        double& behind = x_behind ? pos_x : pos_0;
        double& ahead = x_behind ? pos_0 : pos_x;
        std::vector<double>* behind_ep = rec ? (x_behind ? &trace.epochs_x : &trace.epochs_0) : nullptr;
        std::vector<double>* ahead_ep = rec ? (x_behind ? &trace.epochs_0 : &trace.epochs_x) : nullptr;

        it.step2 = step2_attempt(model, cert.comp, it.step1.D_R, rng);
        for (double v : it.step2.lag_increments) {
            behind += v;
            if (behind_ep) behind_ep->push_back(behind);
        }
        if (it.step2.success) {
            ahead = behind;
            if (ahead_ep && !it.step2.lead_increments.empty()) {
                const auto n = it.step2.lead_increments.size();
                for (std::size_t j = 0; j + 1 < n; ++j) ahead_ep->push_back(ahead_ep->back() + it.step2.lead_increments[j]);
                ahead_ep->push_back(behind);
            }
        } else {
            for (double v : it.step2.lead_increments) {
                ahead += v;
                if (ahead_ep) ahead_ep->push_back(ahead);
            }
        }
        acc += it.step1.T_R + it.step2.m;
        const bool done = it.step2.success;
        trace.iterations.push_back(std::move(it));
        if (done) break;
    }
    trace.T_star = acc;
    trace.meeting_epoch = pos_x;

    if (rec) {
        double e = trace.meeting_epoch;
        while (e <= options.horizon) {
            e += model.sample(rng);
            trace.epochs_x.push_back(e);
            trace.epochs_0.push_back(e);
        }
    }
    return trace;
}

CouplingTrace run_coupling(const InterArrivalModel& model, const UniformComponent& comp,
                           const BoundParams& params, double x, RngStream& rng,
                           const CouplingOptions& options) {
    return run_coupling(model, assemble_certificate(model, comp, params), x, rng, options);
}

double residual_life(const std::vector<double>& epochs, double t) {
    const auto it = std::upper_bound(epochs.begin(), epochs.end(), t);
    if (it == epochs.end()) throw SimulationError("epoch list does not extend past t");
    return *it - t;
}

std::uint64_t count_in(const std::vector<double>& epochs, double a, double b) {
    const auto lo = std::upper_bound(epochs.begin(), epochs.end(), a);
    const auto hi = std::upper_bound(epochs.begin(), epochs.end(), b);
    return static_cast<std::uint64_t>(hi - lo);
}

nlohmann::json TailEstimate::to_json() const {
    return {{"t", t_grid}, {"survival", survival}, {"stderr", stderr_}, {"n", n}, {"seed", seed}};
}

void TailEstimate::write_csv(std::ostream& os) const {
    os << "t,survival,stderr\n";
    os.precision(17);
    for (std::size_t i = 0; i < t_grid.size(); ++i) os << t_grid[i] << ',' << survival[i] << ',' << stderr_[i] << '\n';
}

std::vector<double> default_t_grid(double x, double rate, int points) {
    if (!(rate > 0.0)) throw DomainError("default t grid needs a positive rate");
    if (points < 2) throw InvalidInput("t grid needs at least two points");
    // Offsets 0 and log-spaced up to 20 / rate, so x = 0 is allowed.
    const double span = 20.0 / rate;
    std::vector<double> t{x};
    const double lo = std::log(span * 1e-3), hi = std::log(span);
    for (int i = 0; i < points - 1; ++i) t.push_back(x + std::exp(lo + (hi - lo) * i / (points - 2)));
    t.back() = x + span;
    return t;
}

TailEstimate estimate_tail(const InterArrivalModel& model, const BoundCertificate& cert, double x,
                           const std::vector<double>& t_grid, std::uint64_t n, std::uint64_t seed,
                           unsigned threads) {
    if (n < 100) throw InvalidInput("tail estimation needs n >= 100 replicas");
    check_grid(t_grid);
    TailEstimate est;
    est.t_grid = t_grid;
    est.n = n;
    est.seed = seed;
    est.samples.resize(n);
    detail::parallel_for(n, threads, [&](std::uint64_t i) {
        RngStream rng(seed, stream_of(0, i));
        est.samples[i] = run_coupling(model, cert, x, rng).T_star;
    });
    est.exceed.assign(t_grid.size(), 0);
    for (double s : est.samples) {
        const auto k = std::lower_bound(t_grid.begin(), t_grid.end(), s) - t_grid.begin();
        for (std::ptrdiff_t j = 0; j < k; ++j) ++est.exceed[j];
    }
    for (auto k : est.exceed) {
        const double s = static_cast<double>(k) / static_cast<double>(n);
        est.survival.push_back(s);
        est.stderr_.push_back(std::sqrt(s * (1.0 - s) / static_cast<double>(n)));
    }
    return est;
}

TailEstimate estimate_tail(const InterArrivalModel& model, const UniformComponent& comp,
                           const BoundParams& params, double x, const std::vector<double>& t_grid,
                           std::uint64_t n, std::uint64_t seed, unsigned threads) {
    return estimate_tail(model, assemble_certificate(model, comp, params), x, t_grid, n, seed, threads);
}

RenewalPath simulate_renewal(const InterArrivalModel& model, double delay, double t, RngStream& rng) {
    if (!(delay >= 0.0)) throw DomainError("delay must be nonnegative");
    if (!std::isfinite(t)) throw DomainError("horizon must be finite");
    RenewalPath path;
    double e = delay;
    while (e <= t) {
        path.epochs.push_back(e);
        e += model.sample(rng);
    }
    path.residual = e - t;
    return path;
}

std::vector<stats::MeanEstimate> estimate_renewal_curve(const InterArrivalModel& model,
                                                        DelaySpec delay,
                                                        const std::vector<double>& t_grid,
                                                        double h, std::uint64_t n,
                                                        std::uint64_t seed, unsigned threads) {
    if (!(h > 0.0)) throw DomainError("window length h must be positive");
    if (n < 2) throw InvalidInput("renewal measure estimation needs n >= 2");
    check_grid(t_grid);
    std::optional<StationaryDelaySampler> stationary;
    if (delay.stationary) stationary.emplace(model);
    const double end = t_grid.back() + h;
    const std::size_t T = t_grid.size();

    // Integer sums are exact in any order, so per-block partial sums stay deterministic.
    const unsigned k = static_cast<unsigned>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(threads, n)));
    std::vector<std::vector<std::uint64_t>> sum(k, std::vector<std::uint64_t>(T)), sq(k, std::vector<std::uint64_t>(T));
    detail::parallel_for(k, k, [&](std::uint64_t w) {
        std::vector<double> epochs;
        for (std::uint64_t i = n * w / k; i < n * (w + 1) / k; ++i) {
            RngStream rng(seed, stream_of(0, i));
            const double d = stationary ? stationary->sample(rng) : delay.value;
            epochs.clear();
            for (double e = d; e <= end; e += model.sample(rng)) epochs.push_back(e);
            for (std::size_t j = 0; j < T; ++j) {
                const std::uint64_t c = count_in(epochs, t_grid[j], t_grid[j] + h);
                sum[w][j] += c;
                sq[w][j] += c * c;
            }
        }
    });
    std::vector<stats::MeanEstimate> out(T);
    const double nn = static_cast<double>(n);
    for (std::size_t j = 0; j < T; ++j) {
        std::uint64_t s = 0, q = 0;
        for (unsigned w = 0; w < k; ++w) {
            s += sum[w][j];
            q += sq[w][j];
        }
        const double mean = static_cast<double>(s) / nn;
        const double var = std::max(0.0, (static_cast<double>(q) - nn * mean * mean) / (nn - 1.0));
        out[j] = {mean, std::sqrt(var / nn), n};
    }
    return out;
}

stats::MeanEstimate estimate_renewal_measure(const InterArrivalModel& model, DelaySpec delay,
                                             double t, double h, std::uint64_t n,
                                             std::uint64_t seed, unsigned threads) {
    return estimate_renewal_curve(model, delay, {t}, h, n, seed, threads).front();
}

nlohmann::json TvEstimate::to_json() const {
    return {{"tv_lower", tv_lower}, {"tv_lower_stderr", tv_lower_stderr}, {"tv_upper", tv_upper},
            {"tv_upper_stderr", tv_upper_stderr}, {"raw_binned", raw_binned}, {"bins", bins}};
}

TvEstimate estimate_tv(const InterArrivalModel& model, const BoundCertificate& cert, double x,
                       double t, std::uint64_t n, int bins, std::uint64_t seed, unsigned threads) {
    if (n < 2) throw InvalidInput("TV estimation needs n >= 2");
    if (bins == 1) throw InvalidInput("TV estimation needs at least two bins");
    if (!(t >= 0.0)) throw DomainError("t must be nonnegative");
    TvEstimate est;
    est.bins = bins > 0 ? bins : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));
    const double nn = static_cast<double>(n);

    std::vector<unsigned char> exceed(n);
    std::vector<double> bx(n), b0(n);
    detail::parallel_for(n, threads, [&](std::uint64_t i) {
        RngStream r1(seed, stream_of(0, i));
        exceed[i] = run_coupling(model, cert, x, r1).T_star > t;
        RngStream r2(seed, stream_of(1, i));
        bx[i] = simulate_renewal(model, x, t, r2).residual;
        RngStream r3(seed, stream_of(2, i));
        b0[i] = simulate_renewal(model, 0.0, t, r3).residual;
    });
    const double p = static_cast<double>(std::count(exceed.begin(), exceed.end(), 1)) / nn;
    est.tv_upper = p;
    est.tv_upper_stderr = std::sqrt(p * (1.0 - p) / nn);

    const double top = std::max(*std::max_element(bx.begin(), bx.end()), *std::max_element(b0.begin(), b0.end()));
    const double width = top / est.bins;
    std::vector<double> px(est.bins), p0(est.bins);
    auto bin_of = [&](double b) {
        const int j = width > 0.0 ? static_cast<int>(b / width) : 0;
        return std::min(j, est.bins - 1);
    };
    for (std::uint64_t i = 0; i < n; ++i) {
        px[bin_of(bx[i])] += 1.0 / nn;
        p0[bin_of(b0[i])] += 1.0 / nn;
    }
    // Under equal laws E|p^ - q^| is about sqrt(2/pi) sqrt(2 pi_j (1 - pi_j) / n) per bin.
    double raw = 0.0, bias = 0.0, var = 0.0;
    for (int j = 0; j < est.bins; ++j) {
        raw += std::abs(px[j] - p0[j]);
        const double pi = 0.5 * (px[j] + p0[j]);
        bias += std::sqrt(2.0 / M_PI) * std::sqrt(2.0 * pi * (1.0 - pi) / nn);
        var += (px[j] * (1.0 - px[j]) + p0[j] * (1.0 - p0[j])) / nn;
    }
    est.raw_binned = 0.5 * raw;
    est.tv_lower = 0.5 * (raw - bias);
    est.tv_lower_stderr = 0.5 * std::sqrt(var);
    return est;
}

nlohmann::json Inequality5Result::to_json() const {
    auto side = [](const Inequality5Side& s) {
        return nlohmann::json{{"lhs", s.lhs}, {"rhs", s.rhs}, {"stderr", s.stderr_}, {"holds", s.holds}};
    };
    return {{"t", t}, {"h", h}, {"p_exceed", p_exceed}, {"U0", U0}, {"U0_simulated", U0_simulated},
            {"copy_x", side(copy_x)}, {"copy_0", side(copy_0)}, {"holds", holds}};
}

Inequality5Result check_inequality5(const InterArrivalModel& model, const BoundCertificate& cert,
                                    double x, double t, double h, std::uint64_t n,
                                    std::uint64_t seed, std::optional<double> U0, unsigned threads) {
    if (!(h > 0.0)) throw DomainError("window length h must be positive");
    if (n < 2) throw InvalidInput("inequality check needs n >= 2");
    Inequality5Result res;
    res.t = t;
    res.h = h;
    const double nn = static_cast<double>(n);

    std::vector<unsigned char> ev(n);
    std::vector<std::uint32_t> cx(n), c0(n), u0(U0 ? 0 : n);
    CouplingOptions opt;
    opt.record_epochs = true;
    detail::parallel_for(n, threads, [&](std::uint64_t i) {
        RngStream r1(seed, stream_of(0, i));
        auto trace = run_coupling(model, cert, x, r1, opt);
        ev[i] = trace.T_star > t;
        // Shared continuation past the meeting epoch, only where the event needs counts.
        if (ev[i]) {
            for (double e = trace.meeting_epoch; e <= t + h;) {
                e += model.sample(r1);
                trace.epochs_x.push_back(e);
                trace.epochs_0.push_back(e);
            }
        }
        cx[i] = static_cast<std::uint32_t>(count_in(trace.epochs_x, t, t + h));
        c0[i] = static_cast<std::uint32_t>(count_in(trace.epochs_0, t, t + h));
        if (!U0) {
            RngStream r2(seed, stream_of(1, i));
            u0[i] = static_cast<std::uint32_t>(count_in(simulate_renewal(model, 0.0, h, r2).epochs, 0.0, h));
        }
    });

    stats::MeanEstimate u0_est{};
    if (U0) {
        res.U0 = *U0;
    } else {
        std::vector<double> v(u0.begin(), u0.end());
        u0_est = stats::mean_estimate(v);
        res.U0 = u0_est.mean;
        res.U0_simulated = true;
    }
    res.p_exceed = static_cast<double>(std::count(ev.begin(), ev.end(), 1)) / nn;

    auto side = [&](const std::vector<std::uint32_t>& c) {
        std::vector<double> lhs(n), d(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            lhs[i] = ev[i] ? c[i] : 0.0;
            d[i] = ev[i] ? c[i] - (res.U0 + 1.0) : 0.0;
        }
        Inequality5Side s;
        s.lhs = stats::mean_estimate(lhs).mean;
        s.rhs = res.p_exceed * (res.U0 + 1.0);
        const auto de = stats::mean_estimate(d);
        const double extra = res.U0_simulated ? res.p_exceed * u0_est.stderr_ : 0.0;
        s.stderr_ = std::sqrt(de.stderr_ * de.stderr_ + extra * extra);
        s.holds = s.lhs - s.rhs <= 3.0 * s.stderr_;
        return s;
    };
    res.copy_x = side(cx);
    res.copy_0 = side(c0);
    res.holds = res.copy_x.holds && res.copy_0.holds;
    return res;
}

nlohmann::json SupermartingaleResult::to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows) rs.push_back({{"n", r.n}, {"mean", r.mean}, {"stderr", r.stderr_}, {"holds", r.holds}});
    return {{"M0", M0}, {"rho", rho}, {"rows", rs}, {"holds", holds}, {"margin", finite_or_null(margin)}};
}

SupermartingaleResult check_supermartingale(const InterArrivalModel& model, double beta,
                                            double lambda, double R, double x,
                                            const std::vector<int>& horizons,
                                            std::uint64_t replicas, std::uint64_t seed,
                                            unsigned threads) {
    if (horizons.empty()) throw InvalidInput("no horizons to test");
    if (replicas < 2) throw InvalidInput("supermartingale check needs at least two replicas");
    for (int n : horizons)
        if (n < 0) throw InvalidInput("horizons must be nonnegative");
    SupermartingaleResult res;
    res.rho = drift_factor(model, beta, lambda, R);
    res.M0 = std::exp(beta * std::abs(x));
    const int top = *std::max_element(horizons.begin(), horizons.end());
    const std::size_t H = horizons.size();

    std::vector<double> values(replicas * H);
    detail::parallel_for(replicas, threads, [&](std::uint64_t r) {
        RngStream rng(seed, stream_of(0, r));
        double Y = x, cost = 0.0;
        int steps = 0;
        std::vector<double> path(top + 1);
        path[0] = res.M0;
        for (int n = 1; n <= top; ++n) {
            if (std::abs(Y) > R) {
                const double X = model.sample(rng);
                if (Y >= 0.0) {
                    Y -= X;
                    cost += X;
                } else {
                    Y += X;
                }
                ++steps;
            }
            path[n] = std::exp(beta * std::abs(Y) + lambda * cost - steps * std::log(res.rho));
        }
        for (std::size_t j = 0; j < H; ++j) values[r * H + j] = path[horizons[j]];
    });

    res.holds = true;
    res.margin = kInf;
    for (std::size_t j = 0; j < H; ++j) {
        std::vector<double> col(replicas);
        for (std::uint64_t r = 0; r < replicas; ++r) col[r] = values[r * H + j];
        const auto est = stats::mean_estimate(col);
        // Relative slack absorbs rounding in the replica average of a constant.
        const double slack = 1e-12 * res.M0;
        SupermartingaleRow row{horizons[j], est.mean, est.stderr_, est.mean <= res.M0 + slack + 3.0 * est.stderr_};
        res.holds = res.holds && row.holds;
        res.margin = std::min(res.margin, (res.M0 + slack + 3.0 * est.stderr_ - est.mean) / res.M0);
        res.rows.push_back(row);
    }
    return res;
}

nlohmann::json ExponentialFit::to_json() const {
    return {{"amplitude", amplitude}, {"rate", rate}, {"residual", residual}, {"used", used}, {"dropped", dropped}};
}

ExponentialFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& values,
                                    const std::vector<double>& weights) {
    if (t.size() != values.size()) throw InvalidInput("t and values differ in length");
    if (!weights.empty() && weights.size() != t.size()) throw InvalidInput("weights differ in length");
    std::vector<double> tt, vv, ww;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i]) || !std::isfinite(t[i])) {
            ++dropped;
            continue;
        }
        const double w = weights.empty() ? 1.0 / (values[i] * values[i]) : weights[i];
        if (!(w >= 0.0)) throw InvalidInput("weights must be nonnegative");
        tt.push_back(t[i]);
        vv.push_back(values[i]);
        ww.push_back(w);
    }
    if (dropped > 0) spdlog::warn("exponential fit: dropped {} non-positive values", dropped);
    if (tt.size() < 3) throw InvalidInput("exponential fit needs at least 3 positive values");

    // Weighted log-linear start: log v = a - r t with weights w v^2.
    double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < tt.size(); ++i) {
        const double w = ww[i] * vv[i] * vv[i], y = std::log(vv[i]);
        sw += w;
        st += w * tt[i];
        sy += w * y;
        stt += w * tt[i] * tt[i];
        sty += w * tt[i] * y;
    }
    const double det = sw * stt - st * st;
    if (!(det > 0.0)) throw InvalidInput("exponential fit needs distinct t values");
    double a = (stt * sy - st * sty) / det;
    double r = -(sw * sty - st * sy) / det;

    auto cost = [&](double a_, double r_) {
        double c = 0.0;
        for (std::size_t i = 0; i < tt.size(); ++i) {
            const double e = vv[i] - std::exp(a_ - r_ * tt[i]);
            c += ww[i] * e * e;
        }
        return c;
    };

    // Levenberg-Marquardt on (log A, rate).
    double c0 = cost(a, r), mu = 1e-3;
    for (int iter = 0; iter < 500 && mu < 1e16; ++iter) {
        double h11 = 0, h12 = 0, h22 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < tt.size(); ++i) {
            const double f = std::exp(a - r * tt[i]);
            const double j1 = f, j2 = -tt[i] * f, e = vv[i] - f;
            h11 += ww[i] * j1 * j1;
            h12 += ww[i] * j1 * j2;
            h22 += ww[i] * j2 * j2;
            g1 += ww[i] * j1 * e;
            g2 += ww[i] * j2 * e;
        }
        const double d11 = h11 * (1.0 + mu), d22 = h22 * (1.0 + mu);
        const double dd = d11 * d22 - h12 * h12;
        if (!(dd > 0.0)) {
            mu *= 10.0;
            continue;
        }
        const double da = (d22 * g1 - h12 * g2) / dd, dr = (d11 * g2 - h12 * g1) / dd;
        const double c1 = cost(a + da, r + dr);
        if (c1 <= c0) {
            a += da;
            r += dr;
            const bool tiny = std::abs(da) <= 1e-15 * (1.0 + std::abs(a)) && std::abs(dr) <= 1e-15 * (1.0 + std::abs(r));
            const bool flat = c0 - c1 <= 1e-30 * c0;
            c0 = c1;
            mu = std::max(mu / 10.0, 1e-12);
            if (tiny || flat) break;
        } else {
            mu *= 10.0;
        }
    }
    return {std::exp(a), r, std::sqrt(c0), tt.size(), dropped};
}

}  // namespace renewal
