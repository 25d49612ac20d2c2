#pragma once

// Adaptive Gauss-Kronrod (7/15 point) quadrature with global subdivision,
// plus a semi-infinite driver that extends the upper limit in doubling
// chunks and tells convergence apart from divergence.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "renewal/error.hpp"

namespace renewal::quad {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    bool converged = true;
};

namespace detail {

// Abscissae and weights of the 15-point Kronrod rule and its embedded
// 7-point Gauss rule (QUADPACK dqk15).
inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(const F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double resg = fc * wg[3];
    double resk = fc * wgk[7];
    double resabs = std::abs(resk);
    double fv1[7], fv2[7];
    for (int j = 0; j < 3; ++j) {
        const int jtw = 2 * j + 1;
        const double absc = half * xgk[jtw];
        const double f1 = f(centre - absc);
        const double f2 = f(centre + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += wg[j] * (f1 + f2);
        resk += wgk[jtw] * (f1 + f2);
        resabs += wgk[jtw] * (std::abs(f1) + std::abs(f2));
    }
    for (int j = 0; j < 4; ++j) {
        const int jtwm1 = 2 * j;
        const double absc = half * xgk[jtwm1];
        const double f1 = f(centre - absc);
        const double f2 = f(centre + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += wgk[jtwm1] * (f1 + f2);
        resabs += wgk[jtwm1] * (std::abs(f1) + std::abs(f2));
    }
    const double reskh = 0.5 * resk;
    double resasc = wgk[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += wgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

    const double value = resk * half;
    resasc *= std::abs(half);
    resabs *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return {a, b, value, err};
}

}  // namespace detail

// Integrates f over [a, b], splitting first at every breakpoint inside (a, b).
template <class F>
Result integrate(const F& f, double a, double b, const Options& opt = {},
                 std::span<const double> breakpoints = {}) {
    Result out;
    if (!(b > a)) return out;

    std::vector<double> cuts{a};
    for (double p : breakpoints)
        if (p > a && p < b) cuts.push_back(p);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<detail::Panel> heap;
    double total = 0.0, error = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = detail::gk15(f, cuts[i], cuts[i + 1]);
        total += p.value;
        error += p.error;
        heap.push(p);
        out.evaluations += 15;
    }
    if (!std::isfinite(total)) {
        out.value = total;
        out.abs_error = std::numeric_limits<double>::infinity();
        return out;
    }

    int intervals = static_cast<int>(heap.size());
    auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
    while (error > tolerance() && intervals < opt.max_intervals) {
        const auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // interval at roundoff scale
        heap.pop();
        const auto left = detail::gk15(f, worst.a, mid);
        const auto right = detail::gk15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
        if (!std::isfinite(total)) break;
    }
    // Re-sum to shed the drift of incremental updates.
    total = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.abs_error = error;
    out.converged = std::isfinite(total) && error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) * 1.0000001;
    return out;
}

struct TailResult {
    double value = 0.0;
    bool divergent = false;
};

// Integrates a nonnegative f over [a, inf). The range [a, upper] is
// integrated first, then chunks [u, u + w] with doubling width until a chunk
// is negligible and shrinking. Growth that persists through max_chunks, or an
// overflowing total, is reported as divergence. A decaying tail that never
// reaches tolerance throws QuadratureError.
template <class F>
TailResult integrate_to_infinity(const F& f, double a, double upper, const Options& opt = {},
                                 std::span<const double> breakpoints = {}, int max_chunks = 160) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    upper = std::max(upper, a + 1e-3);
    auto head = integrate(f, a, upper, opt, breakpoints);
    if (!std::isfinite(head.value)) return {inf, true};
    if (!head.converged) throw QuadratureError("adaptive quadrature did not converge on [a, upper]");

    double total = head.value;
    double lo = upper;
    double width = std::max(upper - a, 1e-3);
    double previous = head.value;
    int tiny_in_a_row = 0;
    for (int chunk = 0; chunk < max_chunks; ++chunk) {
        auto piece = integrate(f, lo, lo + width, opt, breakpoints);
        if (!std::isfinite(piece.value)) return {inf, true};
        if (!piece.converged && piece.abs_error > 1e-3 * opt.rel_tol * std::abs(total + piece.value))
            throw QuadratureError("adaptive quadrature did not converge on a tail chunk");
        total += piece.value;
        if (!std::isfinite(total)) return {inf, true};
        const bool shrinking = piece.value <= previous;
        if (shrinking && piece.value <= 0.01 * opt.rel_tol * std::abs(total)) {
            if (++tiny_in_a_row >= 2) return {total, false};
        } else {
            tiny_in_a_row = 0;
        }
        previous = piece.value;
        lo += width;
        width *= 2.0;
    }
    if (previous > 1e-6 * total) return {inf, true};
    throw QuadratureError("tail integral neither converged nor diverged within the chunk budget");
}

}  // namespace renewal::quad
