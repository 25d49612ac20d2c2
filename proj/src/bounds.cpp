#include "renewal/bounds.hpp"

#include <cmath>
#include <sstream>

#include "renewal/error.hpp"

namespace renewal {

void BoundParams::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive and finite");
    if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0, 1)");
    if (!(theta > 0.0 && theta <= 1.0)) throw DomainError("theta must lie in (0, 1]");
}

nlohmann::json BoundParams::to_json() const {
    return {{"beta", beta}, {"delta", delta}, {"theta", theta}};
}

nlohmann::json BoundCertificate::to_json() const {
    return {
        {"params", params.to_json()},
        {"component", comp.to_json()},
        {"R", R},
        {"R_raw", R_raw},
        {"R_clamped", R_clamped},
        {"k_ceil", k_ceil},
        {"k_floor", k_floor},
        {"eta_pow", eta_pow},
        {"cond_max_laplace", cond_max},
        {"cycle_cost", cycle_cost},
        {"q", q},
        {"prefactor", prefactor},
        {"rate", rate},
        {"corollary_C", corollary_C},
        {"gamma", gamma},
        {"valid", valid},
        {"degenerate", degenerate},
    };
}

double compute_R_raw(const InterArrivalModel& model, const BoundParams& params) {
    params.validate();
    const double b = params.beta;
    const double up = laplace(model, (1.0 + params.delta) * b);
    if (!std::isfinite(up)) {
        std::ostringstream os;
        os << "L((1+delta)beta) is infinite at beta=" << b << ", delta=" << params.delta;
        throw DomainError(os.str());
    }
    const double down = laplace(model, -(1.0 - params.delta) * b);
    return std::log(up / (1.0 - down)) / (2.0 * b);
}

double compute_R(const InterArrivalModel& model, const BoundParams& params) {
    return std::max(0.0, compute_R_raw(model, params));
}

double drift_factor(const InterArrivalModel& model, double beta, double lambda, double R) {
    if (!(beta > 0.0) || !(lambda >= 0.0 && lambda < beta)) {
        throw DomainError("drift factor needs 0 <= lambda < beta");
    }
    const double up = laplace(model, lambda + beta);
    if (!std::isfinite(up)) throw DomainError("L(lambda + beta) is infinite");
    return laplace(model, -(beta - lambda)) + std::exp(-2.0 * beta * R) * up;
}

double component_cond_max(const InterArrivalModel& model, const UniformComponent& comp,
                          double gamma) {
    const double a = comp.c + comp.L;
    if (model.survival(a) <= 0.0 && a >= model.support().hi) return std::exp(gamma * a);
    return conditional_max_laplace(model, a, gamma);
}

CycleTerms cycle_terms(double R_raw, const UniformComponent& comp, double theta_beta,
                       double cond_max) {
    CycleTerms t;
    t.R_raw = R_raw;
    t.R = std::max(0.0, R_raw);
    t.k_ceil = static_cast<long>(std::ceil(t.R / comp.L));
    t.k_floor = static_cast<long>(std::floor(t.R / comp.L));
    t.eta_pow = std::pow(comp.eta(), static_cast<double>(t.k_ceil));
    t.cond_max = cond_max;
    t.cycle_cost =
        std::exp(theta_beta * (t.R + static_cast<double>(t.k_floor) * comp.c)) * cond_max;
    // eta^0 = 1 makes the failure factor vanish even if the cost is infinite.
    t.q = t.k_ceil == 0 ? 0.0 : t.cycle_cost * (1.0 - t.eta_pow);
    return t;
}

CycleTerms cycle_terms(const InterArrivalModel& model, const UniformComponent& comp,
                       const BoundParams& params) {
    comp.validate();
    const double g = params.theta * params.beta;
    return cycle_terms(compute_R_raw(model, params), comp, g, component_cond_max(model, comp, g));
}

double validity(const InterArrivalModel& model, const UniformComponent& comp,
                const BoundParams& params) {
    return cycle_terms(model, comp, params).q;
}

BoundCertificate assemble_certificate(const InterArrivalModel& model, const UniformComponent& comp,
                                      const BoundParams& params, std::optional<double> gamma) {
    const CycleTerms t = cycle_terms(model, comp, params);
    BoundCertificate cert;
    cert.params = params;
    cert.comp = comp;
    cert.R_raw = t.R_raw;
    cert.R = t.R;
    cert.R_clamped = t.R_raw < 0.0;
    cert.k_ceil = t.k_ceil;
    cert.k_floor = t.k_floor;
    cert.eta_pow = t.eta_pow;
    cert.cond_max = t.cond_max;
    cert.cycle_cost = t.cycle_cost;
    cert.q = t.q;
    cert.rate = params.rate();
    cert.degenerate = cert.rate == 0.0;
    cert.prefactor = t.q < 1.0 ? t.eta_pow * t.cycle_cost / (1.0 - t.q) : kInf;
    cert.valid = t.q < 1.0 && std::isfinite(cert.prefactor);
    cert.corollary_C = std::max(1.0, cert.prefactor);
    if (gamma) {
        const bool ok = cert.degenerate ? *gamma == 0.0 : (*gamma > 0.0 && *gamma < cert.rate);
        if (!ok) throw DomainError("gamma must lie in (0, theta delta beta)");
        cert.gamma = *gamma;
    } else {
        cert.gamma = 0.99 * cert.rate;
    }
    return cert;
}

double theorem1_bound(const BoundCertificate& cert, double x, double t) {
    if (!cert.valid) throw InvalidCertificate("validity condition q < 1 fails");
    if (!(x >= 0.0)) throw DomainError("x must be nonnegative");
    if (!(t >= x)) throw DomainError("theorem bound needs t >= x");
    const double spread = x > cert.R ? cert.params.theta * cert.params.beta * x : 0.0;
    return std::exp(spread) * cert.prefactor * std::exp(-cert.rate * t);
}

double theorem1_bound(const InterArrivalModel& model, const UniformComponent& comp,
                      const BoundParams& params, double x, double t) {
    return theorem1_bound(assemble_certificate(model, comp, params), x, t);
}

double corollary_tv_bound(const BoundCertificate& cert, double gamma, double x, double t) {
    if (!cert.valid) throw InvalidCertificate("validity condition q < 1 fails");
    if (!(gamma > 0.0 && gamma < cert.rate)) throw DomainError("gamma must lie in (0, theta delta beta)");
    if (!(x >= 0.0) || !(t >= 0.0)) throw DomainError("x and t must be nonnegative");
    return std::exp(cert.params.theta * cert.params.beta * x) * cert.corollary_C * std::exp(-gamma * t);
}

double corollary_tv_bound(const InterArrivalModel& model, const UniformComponent& comp,
                          const BoundParams& params, double gamma, double x, double t) {
    return corollary_tv_bound(assemble_certificate(model, comp, params), gamma, x, t);
}

double corollary_renewal_bound(const BoundCertificate& cert, double gamma, double x, double t,
                               double sup_D, double U0_of_supD) {
    if (!(sup_D > 0.0)) throw DomainError("sup D must be positive");
    if (!(U0_of_supD >= 0.0)) throw DomainError("U0((0, sup D)) must be nonnegative");
    return 2.0 * corollary_tv_bound(cert, gamma, x, t) * (U0_of_supD + 1.0);
}

double corollary_renewal_bound(const InterArrivalModel& model, const UniformComponent& comp,
                               const BoundParams& params, double gamma, double x, double t,
                               double sup_D, double U0_of_supD) {
    return corollary_renewal_bound(assemble_certificate(model, comp, params), gamma, x, t, sup_D,
                                   U0_of_supD);
}

double lorden_upper_bound(const InterArrivalModel& model, double h) {
    if (!(h > 0.0)) throw DomainError("h must be positive");
    const auto m2 = model.second_moment();
    if (!m2) throw DomainError("second moment unavailable for " + model.kind());
    const double mu = model.mean();
    return h / mu + *m2 / (mu * mu);
}

double geometric_sum_bound(const GeomSumSpec& spec) {
    if (!(spec.p > 0.0 && spec.p < 1.0)) throw DomainError("p must lie in (0, 1)");
    if (spec.psi >= -std::log1p(-spec.p)) return kInf;
    const double e = std::exp(spec.psi);
    const double denom = 1.0 - e * (1.0 - spec.p);
    if (!(denom > 0.0)) return kInf;
    return spec.p * e / denom;
}

}  // namespace renewal
