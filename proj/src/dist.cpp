#include "renewal/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "renewal/error.hpp"
#include "renewal/quadrature.hpp"

namespace renewal {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kSqrt2OverPi = 0.79788456080286535588;

// Quantile by bisection on the cdf, for laws without an explicit inverse.
double bisect_quantile(const Distribution& d, double p) {
    if (p <= 0.0) return d.support().lo;
    if (p >= 1.0) return d.support().hi;
    double lo = d.support().lo;
    double hi = d.support().hi;
    if (!std::isfinite(hi)) {
        hi = std::max(1.0, lo + 1.0);
        while (d.cdf(hi) < p) hi = lo + 2.0 * (hi - lo);
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (d.cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

class Exponential final : public Distribution {
public:
    explicit Exponential(double rate) : rate_(rate) {
        if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidInput("exponential: rate must be positive");
    }
    std::string kind() const override { return "exponential"; }
    double density(double t) const override { return t < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * t); }
    double log_density(double t) const override {
        return t < 0.0 ? -kInf : std::log(rate_) - rate_ * t;
    }
    double cdf(double t) const override { return t <= 0.0 ? 0.0 : -std::expm1(-rate_ * t); }
    double survival(double t) const override { return t <= 0.0 ? 1.0 : std::exp(-rate_ * t); }
    double quantile(double p) const override { return -std::log1p(-p) / rate_; }
    double upper_quantile(double tail) const override { return -std::log(tail) / rate_; }
    double sample(RngStream& rng) const override { return rng.exponential(rate_); }
    std::optional<double> closed_form_laplace(double beta) const override {
        return beta < rate_ ? rate_ / (rate_ - beta) : kInf;
    }
    std::optional<double> laplace_abscissa() const override { return rate_; }
    double mean() const override { return 1.0 / rate_; }
    std::optional<double> second_moment() const override { return 2.0 / (rate_ * rate_); }
    Interval support() const override { return {0.0, kInf}; }
    nlohmann::json describe() const override { return {{"kind", kind()}, {"rate", rate_}}; }

private:
    double rate_;
};

class Uniform final : public Distribution {
public:
    Uniform(double a, double b) : a_(a), b_(b) {
        if (!(a >= 0.0) || !(b > a) || !std::isfinite(b))
            throw InvalidInput("uniform: need 0 <= a < b < inf");
    }
    std::string kind() const override { return "uniform"; }
    double density(double t) const override { return (t >= a_ && t <= b_) ? 1.0 / (b_ - a_) : 0.0; }
    double cdf(double t) const override { return std::clamp((t - a_) / (b_ - a_), 0.0, 1.0); }
    double survival(double t) const override { return std::clamp((b_ - t) / (b_ - a_), 0.0, 1.0); }
    double quantile(double p) const override { return a_ + p * (b_ - a_); }
    double upper_quantile(double tail) const override { return b_ - tail * (b_ - a_); }
    double sample(RngStream& rng) const override { return rng.uniform(a_, b_); }
    std::optional<double> closed_form_laplace(double beta) const override {
        const double w = b_ - a_;
        if (beta == 0.0) return 1.0;
        return std::exp(beta * a_) * std::expm1(beta * w) / (beta * w);
    }
    std::optional<double> laplace_abscissa() const override { return kInf; }
    double mean() const override { return 0.5 * (a_ + b_); }
    std::optional<double> second_moment() const override { return (a_ * a_ + a_ * b_ + b_ * b_) / 3.0; }
    Interval support() const override { return {a_, b_}; }
    std::vector<double> breakpoints() const override { return {a_, b_}; }
    nlohmann::json describe() const override { return {{"kind", kind()}, {"a", a_}, {"b", b_}}; }

private:
    double a_, b_;
};

// |N(0, sigma^2)|.
class FoldedGaussian final : public Distribution {
public:
    explicit FoldedGaussian(double sigma) : sigma_(sigma) {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("folded_gaussian: sigma must be positive");
    }
    std::string kind() const override { return "folded_gaussian"; }
    double density(double t) const override {
        if (t < 0.0) return 0.0;
        const double u = t / sigma_;
        return kSqrt2OverPi / sigma_ * std::exp(-0.5 * u * u);
    }
    double log_density(double t) const override {
        if (t < 0.0) return -kInf;
        const double u = t / sigma_;
        return std::log(kSqrt2OverPi / sigma_) - 0.5 * u * u;
    }
    double cdf(double t) const override { return t <= 0.0 ? 0.0 : std::erf(t / (sigma_ * kSqrt2)); }
    double survival(double t) const override { return t <= 0.0 ? 1.0 : std::erfc(t / (sigma_ * kSqrt2)); }
    double quantile(double p) const override {
        if (p <= 0.0) return 0.0;
        if (p >= 1.0) return kInf;
        return p < 0.5 ? sigma_ * kSqrt2 * boost::math::erf_inv(p)
                       : sigma_ * kSqrt2 * boost::math::erfc_inv(1.0 - p);
    }
    double upper_quantile(double tail) const override {
        if (tail <= 0.0) return kInf;
        if (tail >= 1.0) return 0.0;
        return sigma_ * kSqrt2 * boost::math::erfc_inv(tail);
    }
    double sample(RngStream& rng) const override {
        return sigma_ * kSqrt2 * boost::math::erfc_inv(rng.uniform());
    }
    std::optional<double> closed_form_laplace(double beta) const override {
        // 2 exp(b^2/2) Phi(b) with b = beta sigma, Phi(b) = erfc(-b/sqrt2)/2.
        const double b = beta * sigma_;
        const double x = -b / kSqrt2;
        if (x > 25.0) {
            // exp(x^2) erfc(x), asymptotic series; erfc itself underflows here.
            const double inv = 1.0 / (2.0 * x * x);
            return (1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv) / (x * std::sqrt(M_PI));
        }
        return std::exp(0.5 * b * b) * std::erfc(x);
    }
    std::optional<double> laplace_abscissa() const override { return kInf; }
    double mean() const override { return sigma_ * kSqrt2OverPi; }
    std::optional<double> second_moment() const override { return sigma_ * sigma_; }
    Interval support() const override { return {0.0, kInf}; }
    nlohmann::json describe() const override { return {{"kind", kind()}, {"sigma", sigma_}}; }

private:
    double sigma_;
};

class Shifted final : public Distribution {
public:
    Shifted(DistributionPtr base, double shift) : base_(std::move(base)), shift_(shift) {
        if (!(shift >= 0.0) || !std::isfinite(shift)) throw InvalidInput("shifted: shift must be >= 0");
    }
    std::string kind() const override { return "shifted"; }
    double density(double t) const override { return base_->density(t - shift_); }
    double log_density(double t) const override { return base_->log_density(t - shift_); }
    double cdf(double t) const override { return base_->cdf(t - shift_); }
    double survival(double t) const override { return base_->survival(t - shift_); }
    double quantile(double p) const override { return shift_ + base_->quantile(p); }
    double upper_quantile(double tail) const override { return shift_ + base_->upper_quantile(tail); }
    double sample(RngStream& rng) const override { return shift_ + base_->sample(rng); }
    std::optional<double> closed_form_laplace(double beta) const override {
        auto base = base_->closed_form_laplace(beta);
        if (!base) return std::nullopt;
        if (!std::isfinite(*base)) return kInf;
        return std::exp(beta * shift_) * *base;
    }
    std::optional<double> laplace_abscissa() const override { return base_->laplace_abscissa(); }
    double mean() const override { return shift_ + base_->mean(); }
    std::optional<double> second_moment() const override {
        auto m2 = base_->second_moment();
        if (!m2) return std::nullopt;
        return *m2 + 2.0 * shift_ * base_->mean() + shift_ * shift_;
    }
    Interval support() const override {
        auto s = base_->support();
        return {s.lo + shift_, s.hi + shift_};
    }
    std::vector<double> breakpoints() const override {
        auto b = base_->breakpoints();
        for (double& x : b) x += shift_;
        b.push_back(shift_);
        return b;
    }
    nlohmann::json describe() const override {
        return {{"kind", kind()}, {"shift", shift_}, {"base", base_->describe()}};
    }

private:
    DistributionPtr base_;
    double shift_;
};

class Mixture final : public Distribution {
public:
    Mixture(std::vector<double> weights, std::vector<DistributionPtr> parts)
        : weights_(std::move(weights)), parts_(std::move(parts)) {
        if (weights_.empty() || weights_.size() != parts_.size())
            throw InvalidInput("mixture: need matching, nonempty weights and components");
        double total = 0.0;
        for (double w : weights_) {
            if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("mixture: weights must be positive");
            total += w;
        }
        for (double& w : weights_) w /= total;
    }
    std::string kind() const override { return "mixture"; }
    double density(double t) const override { return sum([&](const Distribution& d) { return d.density(t); }); }
    double cdf(double t) const override { return sum([&](const Distribution& d) { return d.cdf(t); }); }
    double survival(double t) const override { return sum([&](const Distribution& d) { return d.survival(t); }); }
    double quantile(double p) const override { return bisect_quantile(*this, p); }
    double upper_quantile(double tail) const override {
        double hi = 0.0;
        for (const auto& d : parts_) hi = std::max(hi, d->upper_quantile(tail));
        return hi;
    }
    double sample(RngStream& rng) const override {
        double u = rng.uniform();
        for (std::size_t i = 0; i + 1 < parts_.size(); ++i) {
            if (u < weights_[i]) return parts_[i]->sample(rng);
            u -= weights_[i];
        }
        return parts_.back()->sample(rng);
    }
    std::optional<double> closed_form_laplace(double beta) const override {
        double acc = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            auto v = parts_[i]->closed_form_laplace(beta);
            if (!v) return std::nullopt;
            acc += weights_[i] * *v;
        }
        return acc;
    }
    std::optional<double> laplace_abscissa() const override {
        double a = kInf;
        for (const auto& d : parts_) {
            auto v = d->laplace_abscissa();
            if (!v) return std::nullopt;
            a = std::min(a, *v);
        }
        return a;
    }
    double mean() const override { return sum([](const Distribution& d) { return d.mean(); }); }
    std::optional<double> second_moment() const override {
        double acc = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            auto v = parts_[i]->second_moment();
            if (!v) return std::nullopt;
            acc += weights_[i] * *v;
        }
        return acc;
    }
    Interval support() const override {
        Interval out{kInf, 0.0};
        for (const auto& d : parts_) {
            out.lo = std::min(out.lo, d->support().lo);
            out.hi = std::max(out.hi, d->support().hi);
        }
        return out;
    }
    std::vector<double> breakpoints() const override {
        std::vector<double> out;
        for (const auto& d : parts_) {
            auto b = d->breakpoints();
            out.insert(out.end(), b.begin(), b.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
    nlohmann::json describe() const override {
        nlohmann::json comps = nlohmann::json::array();
        for (std::size_t i = 0; i < parts_.size(); ++i)
            comps.push_back({{"weight", weights_[i]}, {"dist", parts_[i]->describe()}});
        return {{"kind", kind()}, {"components", comps}};
    }

private:
    template <class F>
    double sum(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i) acc += weights_[i] * f(*parts_[i]);
        return acc;
    }

    std::vector<double> weights_;
    std::vector<DistributionPtr> parts_;
};

// Piecewise-linear density on sorted knots.
class Table final : public Distribution {
public:
    Table(std::vector<double> t, std::vector<double> f) : t_(std::move(t)), f_(std::move(f)) {
        if (t_.size() < 2 || t_.size() != f_.size()) throw InvalidInput("table: need >= 2 (t, f) pairs");
        if (t_.front() < 0.0) throw InvalidInput("table: abscissae must be >= 0");
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (!(f_[i] >= 0.0) || !std::isfinite(f_[i])) throw InvalidInput("table: density values must be >= 0");
            if (i > 0 && !(t_[i] > t_[i - 1])) throw InvalidInput("table: abscissae must be strictly increasing");
        }
        cum_.assign(t_.size(), 0.0);
        for (std::size_t i = 1; i < t_.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * (f_[i] + f_[i - 1]) * (t_[i] - t_[i - 1]);
        const double mass = cum_.back();
        if (!(mass > 0.0)) throw InvalidInput("table: density has zero mass");
        for (double& v : f_) v /= mass;
        for (double& v : cum_) v /= mass;
        for (std::size_t i = 1; i < t_.size(); ++i) {
            // Exact moments of a linear density piece.
            const double a = t_[i - 1], b = t_[i], fa = f_[i - 1], fb = f_[i];
            const double slope = (fb - fa) / (b - a);
            auto m1 = [&](double x) { return (fa - slope * a) * x * x / 2 + slope * x * x * x / 3; };
            auto m2 = [&](double x) { return (fa - slope * a) * x * x * x / 3 + slope * x * x * x * x / 4; };
            mean_ += m1(b) - m1(a);
            m2_ += m2(b) - m2(a);
        }
    }
    std::string kind() const override { return "table"; }
    double density(double t) const override {
        if (t < t_.front() || t > t_.back()) return 0.0;
        const std::size_t i = segment(t);
        const double w = (t - t_[i]) / (t_[i + 1] - t_[i]);
        return f_[i] + w * (f_[i + 1] - f_[i]);
    }
    double cdf(double t) const override {
        if (t <= t_.front()) return 0.0;
        if (t >= t_.back()) return 1.0;
        const std::size_t i = segment(t);
        const double dt = t - t_[i];
        const double slope = (f_[i + 1] - f_[i]) / (t_[i + 1] - t_[i]);
        return std::min(1.0, cum_[i] + f_[i] * dt + 0.5 * slope * dt * dt);
    }
    double survival(double t) const override {
        if (t <= t_.front()) return 1.0;
        if (t >= t_.back()) return 0.0;
        // Integrate from the right to keep relative accuracy in the upper tail.
        const std::size_t i = segment(t);
        const double dt = t_[i + 1] - t;
        const double slope = (f_[i + 1] - f_[i]) / (t_[i + 1] - t_[i]);
        const double piece = f_[i + 1] * dt - 0.5 * slope * dt * dt;
        return std::max(0.0, (1.0 - cum_[i + 1]) + piece);
    }
    double quantile(double p) const override {
        if (p <= 0.0) return t_.front();
        if (p >= 1.0) return t_.back();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), p) - cum_.begin());
        i = std::clamp<std::size_t>(i, 1, t_.size() - 1) - 1;
        const double need = p - cum_[i];
        const double slope = (f_[i + 1] - f_[i]) / (t_[i + 1] - t_[i]);
        double dt;
        if (std::abs(slope) < 1e-14) {
            dt = f_[i] > 0.0 ? need / f_[i] : 0.0;
        } else {
            // f_i dt + slope dt^2 / 2 = need, stable root.
            const double disc = std::max(0.0, f_[i] * f_[i] + 2.0 * slope * need);
            dt = 2.0 * need / (f_[i] + std::sqrt(disc));
        }
        return std::clamp(t_[i] + dt, t_[i], t_[i + 1]);
    }
    double sample(RngStream& rng) const override { return quantile(rng.uniform()); }
    std::optional<double> laplace_abscissa() const override { return kInf; }
    double mean() const override { return mean_; }
    std::optional<double> second_moment() const override { return m2_; }
    Interval support() const override { return {t_.front(), t_.back()}; }
    std::vector<double> breakpoints() const override { return t_; }
    nlohmann::json describe() const override {
        nlohmann::json pts = nlohmann::json::array();
        for (std::size_t i = 0; i < t_.size(); ++i) pts.push_back({t_[i], f_[i]});
        return {{"kind", kind()}, {"points", pts}};
    }

private:
    std::size_t segment(double t) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - t_.begin());
        return std::clamp<std::size_t>(i, 1, t_.size() - 1) - 1;
    }

    std::vector<double> t_, f_, cum_;
    double mean_ = 0.0, m2_ = 0.0;
};

double default_alpha(const Distribution& d) {
    if (auto a = d.laplace_abscissa()) {
        if (std::isfinite(*a)) return 0.999 * *a;
        return 8.0 / d.mean();
    }
    return 0.0;  // resolved by the caller through quadrature
}

}  // namespace

double Distribution::log_density(double t) const {
    const double f = density(t);
    return f > 0.0 ? std::log(f) : -kInf;
}

InterArrivalModel::InterArrivalModel(DistributionPtr law, std::optional<double> alpha)
    : law_(std::move(law)) {
    if (!law_) throw InvalidInput("model: null distribution");
    if (alpha) {
        if (!(*alpha > 0.0)) throw InvalidInput("model: alpha must be positive");
        alpha_ = *alpha;
    } else {
        alpha_ = default_alpha(*law_);
        if (alpha_ == 0.0) {
            const double abscissa = divergence_abscissa_by_quadrature(*this);
            alpha_ = std::isfinite(abscissa) ? 0.999 * abscissa : 8.0 / law_->mean();
        }
    }
    if (!std::isfinite(laplace(*this, alpha_)))
        throw InvalidInput("model: L(alpha) must be finite");
}

nlohmann::json InterArrivalModel::describe() const {
    auto j = law_->describe();
    j["alpha"] = alpha_;
    return j;
}

InterArrivalModel make_exponential(double rate) {
    return InterArrivalModel(std::make_shared<Exponential>(rate));
}
InterArrivalModel make_uniform(double a, double b) { return InterArrivalModel(std::make_shared<Uniform>(a, b)); }
InterArrivalModel make_folded_gaussian(double sigma) {
    return InterArrivalModel(std::make_shared<FoldedGaussian>(sigma));
}
InterArrivalModel make_shifted(const InterArrivalModel& base, double shift) {
    return InterArrivalModel(std::make_shared<Shifted>(base.law_ptr(), shift));
}
InterArrivalModel make_mixture(const std::vector<double>& weights,
                               const std::vector<InterArrivalModel>& components) {
    std::vector<DistributionPtr> parts;
    for (const auto& m : components) parts.push_back(m.law_ptr());
    return InterArrivalModel(std::make_shared<Mixture>(weights, std::move(parts)));
}
InterArrivalModel make_table(const std::vector<double>& t, const std::vector<double>& f) {
    return InterArrivalModel(std::make_shared<Table>(t, f));
}

void UniformComponent::validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidInput("component: L must be positive");
    if (!(c >= L) || !std::isfinite(c)) throw InvalidInput("component: need c >= L");
    if (!(eta_tilde > 0.0 && eta_tilde < 1.0)) throw InvalidInput("component: eta_tilde must lie in (0, 1)");
}

nlohmann::json UniformComponent::to_json() const {
    return {{"c", c}, {"L", L}, {"eta_tilde", eta_tilde}, {"eta", eta()}};
}

double laplace(const InterArrivalModel& model, double beta) {
    if (beta == 0.0) return 1.0;
    if (auto v = model.law().closed_form_laplace(beta)) return *v;
    return laplace_quadrature(model, beta);
}

double laplace_quadrature(const InterArrivalModel& model, double beta) {
    if (beta == 0.0) return 1.0;
    const auto& law = model.law();
    const auto sup = law.support();
    const auto bps = law.breakpoints();
    auto integrand = [&](double t) { return std::exp(beta * t + law.log_density(t)); };
    if (std::isfinite(sup.hi)) {
        auto r = quad::integrate(integrand, sup.lo, sup.hi, {}, bps);
        if (!std::isfinite(r.value)) return kInf;
        if (!r.converged) throw QuadratureError("laplace: quadrature did not converge");
        return r.value;
    }
    const double upper = law.upper_quantile(1e-12);
    auto r = quad::integrate_to_infinity(integrand, sup.lo, upper, {}, bps);
    return r.divergent ? kInf : r.value;
}

double divergence_abscissa_by_quadrature(const InterArrivalModel& model, double tol) {
    auto finite_at = [&](double beta) {
        try {
            return std::isfinite(laplace_quadrature(model, beta));
        } catch (const QuadratureError&) {
            // Non-convergence right at the abscissa is treated as divergence.
            return false;
        }
    };
    double lo = 0.0;
    double hi = 1.0 / model.mean();
    while (finite_at(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) return kInf;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (finite_at(mid) ? lo : hi) = mid;
    }
    return lo;
}

double divergence_abscissa(const InterArrivalModel& model, double tol) {
    if (auto a = model.law().laplace_abscissa()) return *a;
    return divergence_abscissa_by_quadrature(model, tol);
}

double conditional_max_laplace(const InterArrivalModel& model, double a, double gamma) {
    const auto& law = model.law();
    const double tail_a = law.survival(a);
    if (!(tail_a > 0.0)) throw InvalidInput("conditional_max_laplace: P(X > a) = 0");
    if (gamma == 0.0) return 1.0;
    const double log_tail_a = std::log(tail_a);
    auto integrand = [&](double s) {
        const double G = std::max(0.0, 1.0 - law.survival(s) / tail_a);
        if (G == 0.0) return 0.0;
        return 2.0 * G * std::exp(gamma * s + law.log_density(s) - log_tail_a);
    };
    const auto sup = law.support();
    const double lo = std::max(a, sup.lo);
    const auto bps = law.breakpoints();
    if (std::isfinite(sup.hi)) {
        auto r = quad::integrate(integrand, lo, sup.hi, {}, bps);
        if (!std::isfinite(r.value)) return kInf;
        if (!r.converged) throw QuadratureError("conditional_max_laplace: quadrature did not converge");
        return r.value;
    }
    const double upper = std::max(lo + 1e-3, law.upper_quantile(1e-12 * tail_a));
    auto r = quad::integrate_to_infinity(integrand, lo, upper, {}, bps);
    return r.divergent ? kInf : r.value;
}

double verify_uniform_component(const InterArrivalModel& model, const UniformComponent& comp,
                                int grid_points) {
    if (grid_points < 2) throw InvalidInput("verify_uniform_component: need at least 2 grid points");
    const double floor = comp.eta_tilde / (2.0 * comp.L);
    const double lo = comp.c - comp.L;
    const double step = 2.0 * comp.L / (grid_points - 1);
    double margin = kInf;
    for (int i = 0; i < grid_points; ++i) {
        const double t = (i == grid_points - 1) ? comp.c + comp.L : lo + i * step;
        margin = std::min(margin, model.density(t) - floor);
    }
    return margin;
}

double sample(const InterArrivalModel& model, RngStream& rng) { return model.sample(rng); }

double sample_residual(const InterArrivalModel& model, const UniformComponent& comp, double shift,
                       RngStream& rng) {
    const double lo = comp.c;
    const double hi = comp.c + comp.L;
    const double floor = comp.floor_density();
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double y = model.sample(rng) + shift;
        if (y < lo || y > hi) return y;
        const double fs = model.density(y - shift);
        if (!(fs > 0.0) || fs < floor * (1.0 - 1e-9))
            throw SimulationError("sample_residual: density below the uniform component floor at t = " +
                                  std::to_string(y) + " (uniform component assumption violated)");
        if (rng.uniform() < 1.0 - floor / fs) return y;
    }
    throw SimulationError("sample_residual: rejection sampler exhausted its attempt budget");
}

SplitPair split_pair(const InterArrivalModel& model, const UniformComponent& comp, double shift,
                     RngStream& rng) {
    if (rng.bernoulli(comp.eta())) {
        const double u = rng.uniform(comp.c, comp.c + comp.L);
        return {u, u - shift, true};
    }
    const double first = sample_residual(model, comp, 0.0, rng);
    const double second = sample_residual(model, comp, shift, rng) - shift;
    return {first, second, false};
}

StationaryDelaySampler::StationaryDelaySampler(InterArrivalModel model, int panels)
    : model_(std::move(model)) {
    const double hi = model_.support_upper_quantile(1e-14);
    const double top = std::isfinite(hi) ? hi : model_.quantile(1.0 - 1e-14);
    knots_.reserve(static_cast<std::size_t>(panels) + 8);
    for (int i = 0; i <= panels; ++i) knots_.push_back(top * i / panels);
    for (double b : model_.law().breakpoints())
        if (b > 0.0 && b < top) knots_.push_back(b);
    std::sort(knots_.begin(), knots_.end());
    knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
    cumulative_.assign(knots_.size(), 0.0);
    for (std::size_t i = 1; i < knots_.size(); ++i) cumulative_[i] = cumulative_[i - 1] + partial(i - 1, knots_[i]);
}

double StationaryDelaySampler::partial(std::size_t panel, double s) const {
    auto surv = [this](double u) { return model_.survival(u); };
    return quad::detail::gk15(surv, knots_[panel], s).value / model_.mean();
}

double StationaryDelaySampler::cdf(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= knots_.back()) return 1.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(1.0, cumulative_[i] + partial(i, s));
}

double StationaryDelaySampler::sample(RngStream& rng) const {
    const double u = rng.uniform();
    if (u >= cumulative_.back()) return knots_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    double lo = knots_[i], hi = knots_[i + 1];
    const double need = u - cumulative_[i];
    // Safeguarded Newton on F(s) = need, F' = P(X > s) / mu.
    double s = lo + (hi - lo) * need / std::max(cumulative_[i + 1] - cumulative_[i], 1e-300);
    for (int iter = 0; iter < 50; ++iter) {
        const double g = partial(i, s) - need;
        if (std::abs(g) <= 1e-14 * std::max(need, 1e-300)) break;
        (g > 0.0 ? hi : lo) = s;
        const double slope = model_.survival(s) / model_.mean();
        double next = slope > 0.0 ? s - g / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
        s = next;
    }
    return s;
}

}  // namespace renewal
