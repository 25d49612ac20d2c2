#pragma once

#include <optional>

#include "json.hpp"
#include "renewal/dist.hpp"

namespace renewal {

struct BoundParams {
    double beta = 0.0;
    double delta = 0.0;
    double theta = 0.0;

    double lambda() const { return delta * beta; }
    double lambda_prime() const { return theta * delta * beta; }
    double rate() const { return theta * delta * beta; }

    // Throws DomainError unless beta > 0, delta in [0,1), theta in (0,1].
    void validate() const;
    nlohmann::json to_json() const;
};

struct BoundCertificate {
    BoundParams params;
    UniformComponent comp;

    double R = 0.0;
    double R_raw = 0.0;       // before clamping at zero
    bool R_clamped = false;
    long k_ceil = 0;          // ceil(R/L)
    long k_floor = 0;         // floor(R/L)
    double eta_pow = 1.0;     // eta^k_ceil
    double cond_max = 1.0;    // Lbar_{c+L}(theta beta)
    double cycle_cost = 1.0;  // E_q = exp(theta beta (R + k_floor c)) Lbar_{c+L}(theta beta)
    double q = 0.0;
    double prefactor = 0.0;   // A
    double rate = 0.0;
    double corollary_C = 1.0;
    double gamma = 0.0;
    bool valid = false;
    bool degenerate = false;  // delta = 0: the bound does not decay

    nlohmann::json to_json() const;
};

struct GeomSumSpec {
    double p = 0.5;
    double psi = 0.0;
};

// Unclamped threshold (1/2b) log[L((1+d)b) / (1 - L(-(1-d)b))].
// Throws DomainError when L((1+d)b) is infinite.
double compute_R_raw(const InterArrivalModel& model, const BoundParams& params);
// Same, clamped at zero.
double compute_R(const InterArrivalModel& model, const BoundParams& params);

// rho = L(-(beta - lambda)) + exp(-2 beta R) L(lambda + beta).
double drift_factor(const InterArrivalModel& model, double beta, double lambda, double R);

// Lbar_{c+L}; when c+L is the right end of a bounded support the value is the
// limit exp(gamma (c+L)).
double component_cond_max(const InterArrivalModel& model, const UniformComponent& comp,
                          double gamma);

// The pieces of the validity quantity q for one (R, component, theta beta).
struct CycleTerms {
    double R_raw = 0.0;
    double R = 0.0;
    long k_ceil = 0;
    long k_floor = 0;
    double eta_pow = 1.0;
    double cond_max = 1.0;
    double cycle_cost = 1.0;
    double q = 0.0;
};

CycleTerms cycle_terms(double R_raw, const UniformComponent& comp, double theta_beta,
                       double cond_max);
CycleTerms cycle_terms(const InterArrivalModel& model, const UniformComponent& comp,
                       const BoundParams& params);

double validity(const InterArrivalModel& model, const UniformComponent& comp,
                const BoundParams& params);

// gamma defaults to 0.99 times the certified rate.
BoundCertificate assemble_certificate(const InterArrivalModel& model, const UniformComponent& comp,
                                      const BoundParams& params,
                                      std::optional<double> gamma = std::nullopt);

double theorem1_bound(const BoundCertificate& cert, double x, double t);
double theorem1_bound(const InterArrivalModel& model, const UniformComponent& comp,
                      const BoundParams& params, double x, double t);

// C = max(1, A). For t < x the factor exp(theta beta x - gamma t) is at least
// one, and for t >= x the theorem bound is below C exp(-gamma t).
double corollary_tv_bound(const BoundCertificate& cert, double gamma, double x, double t);
double corollary_tv_bound(const InterArrivalModel& model, const UniformComponent& comp,
                          const BoundParams& params, double gamma, double x, double t);

double corollary_renewal_bound(const BoundCertificate& cert, double gamma, double x, double t,
                               double sup_D, double U0_of_supD);
double corollary_renewal_bound(const InterArrivalModel& model, const UniformComponent& comp,
                               const BoundParams& params, double gamma, double x, double t,
                               double sup_D, double U0_of_supD);

// h/mu + E X^2 / mu^2, an upper bound on U0((0, h]).
double lorden_upper_bound(const InterArrivalModel& model, double h);

// p e^psi / (1 - e^psi (1 - p)); +inf once psi >= -log(1 - p).
double geometric_sum_bound(const GeomSumSpec& spec);

}  // namespace renewal
