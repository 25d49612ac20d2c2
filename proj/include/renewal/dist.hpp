#pragma once

// Inter-arrival laws, their Laplace transforms, uniform-component
// decompositions and the sampling primitives used by the coupling.

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "renewal/rng.hpp"

namespace renewal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo = 0.0;
    double hi = kInf;
};

// Law of a strictly positive, absolutely continuous inter-arrival time X.
class Distribution {
public:
    virtual ~Distribution() = default;

    virtual std::string kind() const = 0;
    virtual double density(double t) const = 0;
    virtual double log_density(double t) const;
    virtual double cdf(double t) const = 0;
    virtual double survival(double t) const { return 1.0 - cdf(t); }
    virtual double quantile(double p) const = 0;
    // Point t with P(X > t) = tail_mass; accurate for tiny tail masses.
    virtual double upper_quantile(double tail_mass) const { return quantile(1.0 - tail_mass); }
    virtual double sample(RngStream& rng) const = 0;

    // E exp(beta X) when an analytic expression exists; +inf past the abscissa.
    virtual std::optional<double> closed_form_laplace(double /*beta*/) const { return std::nullopt; }
    // sup{beta : E exp(beta X) < inf} when known analytically (+inf allowed).
    virtual std::optional<double> laplace_abscissa() const { return std::nullopt; }

    virtual double mean() const = 0;
    virtual std::optional<double> second_moment() const = 0;
    virtual Interval support() const = 0;
    // Points where the density is not smooth; quadrature splits there.
    virtual std::vector<double> breakpoints() const { return {}; }
    virtual nlohmann::json describe() const = 0;
};

using DistributionPtr = std::shared_ptr<const Distribution>;

// Immutable handle on a law of X plus the exponential-moment witness alpha
// (a point with L(alpha) < inf). Cheap to copy and safe to share across threads.
class InterArrivalModel {
public:
    explicit InterArrivalModel(DistributionPtr law, std::optional<double> alpha = std::nullopt);

    const Distribution& law() const { return *law_; }
    const DistributionPtr& law_ptr() const { return law_; }

    std::string kind() const { return law_->kind(); }
    double density(double t) const { return law_->density(t); }
    double log_density(double t) const { return law_->log_density(t); }
    double cdf(double t) const { return law_->cdf(t); }
    double survival(double t) const { return law_->survival(t); }
    double quantile(double p) const { return law_->quantile(p); }
    double support_upper_quantile(double tail_mass) const { return law_->upper_quantile(tail_mass); }
    double sample(RngStream& rng) const { return law_->sample(rng); }
    double mean() const { return law_->mean(); }
    std::optional<double> second_moment() const { return law_->second_moment(); }
    Interval support() const { return law_->support(); }
    bool has_closed_form_laplace() const { return law_->closed_form_laplace(0.0).has_value(); }
    double alpha() const { return alpha_; }

    nlohmann::json describe() const;

private:
    DistributionPtr law_;
    double alpha_;
};

InterArrivalModel make_exponential(double rate);
InterArrivalModel make_uniform(double a, double b);
InterArrivalModel make_folded_gaussian(double sigma = 1.0);
InterArrivalModel make_shifted(const InterArrivalModel& base, double shift);
InterArrivalModel make_mixture(const std::vector<double>& weights,
                               const std::vector<InterArrivalModel>& components);
// Piecewise-linear density through sorted (t, f(t)) knots, renormalised to unit mass.
InterArrivalModel make_table(const std::vector<double>& t, const std::vector<double>& f);

// Sub-density eta_tilde/(2L) on [c-L, c+L] dominated by the density of X.
struct UniformComponent {
    double c = 0.0;
    double L = 0.0;
    double eta_tilde = 0.0;

    // Mass of the common component on [c, c+L] shared by all shifts X+s, s in [0, L].
    double eta() const { return 0.5 * eta_tilde; }
    // Density level of that common component.
    double floor_density() const { return eta() / L; }

    // Throws InvalidInput unless c >= L > 0 and eta_tilde in (0, 1).
    void validate() const;
    nlohmann::json to_json() const;
};

// E exp(beta X): closed form when the law provides one, else quadrature.
double laplace(const InterArrivalModel& model, double beta);
// Always by quadrature of exp(beta t) f(t); +inf when the integral diverges.
// Throws QuadratureError when the quadrature neither converges nor diverges.
double laplace_quadrature(const InterArrivalModel& model, double beta);
// sup{beta : L(beta) < inf}; analytic when known, else bisection on quadrature
// divergence to the given tolerance (+inf past 1e6).
double divergence_abscissa(const InterArrivalModel& model, double tol = 1e-6);
double divergence_abscissa_by_quadrature(const InterArrivalModel& model, double tol = 1e-6);

// E exp(gamma max(X1, X2)) with X1, X2 i.i.d. copies of X conditioned on X > a,
// by quadrature against the density 2 G(s) g(s). +inf when divergent.
// Throws InvalidInput when P(X > a) = 0.
double conditional_max_laplace(const InterArrivalModel& model, double a, double gamma);

// min over an even grid on [c-L, c+L] of density(t) - eta_tilde/(2L).
double verify_uniform_component(const InterArrivalModel& model, const UniformComponent& comp,
                                int grid_points = 1001);

double sample(const InterArrivalModel& model, RngStream& rng);

// Exact draw from the law with density (f(t - s) - (eta/L) 1[c, c+L](t)) / (1 - eta),
// i.e. X + s with the common uniform component removed. Rejection from X + s.
double sample_residual(const InterArrivalModel& model, const UniformComponent& comp, double shift,
                       RngStream& rng);

struct SplitPair {
    double first = 0.0;   // X'
    double second = 0.0;  // X''
    bool common = false;  // xi
};

// Pair of copies of X with X'' = X' - s on the common event (probability eta).
SplitPair split_pair(const InterArrivalModel& model, const UniformComponent& comp, double shift,
                     RngStream& rng);

// Sampler for the stationary residual-life law with density P(X > s) / mu.
class StationaryDelaySampler {
public:
    explicit StationaryDelaySampler(InterArrivalModel model, int panels = 2048);

    double cdf(double s) const;
    double sample(RngStream& rng) const;

private:
    double partial(std::size_t panel, double s) const;

    InterArrivalModel model_;
    std::vector<double> knots_;
    std::vector<double> cumulative_;
};

}  // namespace renewal
