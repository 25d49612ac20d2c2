#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "renewal/bounds.hpp"
#include "renewal/dist.hpp"
#include "renewal/rng.hpp"
#include "renewal/stats.hpp"

namespace renewal {

struct Step1Outcome {
    double T_R = 0.0;
    double T_R_bar = 0.0;  // sum of X_i with Y_{i-1} >= 0
    double D_R = 0.0;
    double Y_end = 0.0;    // signed terminal gap
    std::uint64_t steps = 0;

    nlohmann::json to_json() const;
};

// Inter-arrivals handed to each copy by the walk, in order.
struct Step1Increments {
    std::vector<double> first;
    std::vector<double> second;
};

inline constexpr std::uint64_t kDefaultWalkCap = 1'000'000'000;
inline constexpr std::uint64_t kDefaultCouplingCap = 1'000'000;

// Biased walk Y_{n+1} = Y_n - X or Y_n + X by the sign of Y_n, stopped once |Y| <= R.
// x >= 0 means the first copy carries the delay.
Step1Outcome step1_walk(const InterArrivalModel& model, double x, double R, RngStream& rng,
                        Step1Increments* increments = nullptr,
                        std::uint64_t max_steps = kDefaultWalkCap);

struct Step2Outcome {
    bool success = false;
    double z = 0.0;
    double M = 0.0;
    double m = 0.0;
    long I = 0;
    long k = 0;
    // Increments of the 0-delayed copy (X') and of the z-delayed copy (X'').
    std::vector<double> lag_increments;
    std::vector<double> lead_increments;

    nlohmann::json to_json() const;
};

// One exact-coupling attempt between copies started at 0 and z.
Step2Outcome step2_attempt(const InterArrivalModel& model, const UniformComponent& comp, double z,
                           RngStream& rng);

struct CouplingIteration {
    Step1Outcome step1;
    Step2Outcome step2;
};

struct CouplingOptions {
    std::uint64_t max_iterations = kDefaultCouplingCap;
    std::uint64_t max_walk_steps = kDefaultWalkCap;
    bool record_epochs = false;
    // With recorded epochs, both copies are extended with shared inter-arrivals
    // past this time once they have coalesced.
    double horizon = 0.0;
};

struct CouplingTrace {
    double x0 = 0.0;
    double R = 0.0;
    std::vector<CouplingIteration> iterations;
    double T_star = 0.0;           // accumulated T_R + m over iterations
    double meeting_epoch = 0.0;    // common epoch of the two copies
    std::vector<double> epochs_x;  // copy delayed by x, starting with T_0 = x
    std::vector<double> epochs_0;  // 0-delayed copy, starting with T_0 = 0

    nlohmann::json to_json() const;
};

CouplingTrace run_coupling(const InterArrivalModel& model, const BoundCertificate& cert, double x,
                           RngStream& rng, const CouplingOptions& options = {});
CouplingTrace run_coupling(const InterArrivalModel& model, const UniformComponent& comp,
                           const BoundParams& params, double x, RngStream& rng,
                           const CouplingOptions& options = {});

// Residual life at t from a sorted epoch list that extends beyond t.
double residual_life(const std::vector<double>& epochs, double t);
// Number of epochs in (a, b].
std::uint64_t count_in(const std::vector<double>& epochs, double a, double b);

struct TailEstimate {
    std::vector<double> t_grid;
    std::vector<double> survival;
    std::vector<double> stderr_;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> exceed;  // replicas with T* > t
    std::vector<double> samples;        // T* per replica, in replica order

    nlohmann::json to_json() const;
    void write_csv(std::ostream& os) const;
};

// x followed by log-spaced offsets up to x + 20 / rate.
std::vector<double> default_t_grid(double x, double rate, int points = 32);

TailEstimate estimate_tail(const InterArrivalModel& model, const BoundCertificate& cert, double x,
                           const std::vector<double>& t_grid, std::uint64_t n, std::uint64_t seed,
                           unsigned threads = 1);
TailEstimate estimate_tail(const InterArrivalModel& model, const UniformComponent& comp,
                           const BoundParams& params, double x, const std::vector<double>& t_grid,
                           std::uint64_t n, std::uint64_t seed, unsigned threads = 1);

struct RenewalPath {
    std::vector<double> epochs;  // T_n <= t, T_0 = delay included
    double residual = 0.0;       // B_t
};

RenewalPath simulate_renewal(const InterArrivalModel& model, double delay, double t, RngStream& rng);

// Initial delay: fixed, or drawn from the stationary residual-life law.
struct DelaySpec {
    bool stationary = false;
    double value = 0.0;

    static DelaySpec fixed(double d) { return {false, d}; }
    static DelaySpec equilibrium() { return {true, 0.0}; }
};

stats::MeanEstimate estimate_renewal_measure(const InterArrivalModel& model, DelaySpec delay,
                                             double t, double h, std::uint64_t n,
                                             std::uint64_t seed, unsigned threads = 1);

// U((t, t + h]) for every t of a grid from the same replicas.
std::vector<stats::MeanEstimate> estimate_renewal_curve(const InterArrivalModel& model,
                                                        DelaySpec delay,
                                                        const std::vector<double>& t_grid,
                                                        double h, std::uint64_t n,
                                                        std::uint64_t seed, unsigned threads = 1);

struct TvEstimate {
    double tv_lower = 0.0;
    double tv_lower_stderr = 0.0;
    double tv_upper = 0.0;
    double tv_upper_stderr = 0.0;
    double raw_binned = 0.0;  // plug-in before removing the null bias
    int bins = 0;

    nlohmann::json to_json() const;
};

// bins <= 0 selects ceil(n^(1/3)).
TvEstimate estimate_tv(const InterArrivalModel& model, const BoundCertificate& cert, double x,
                       double t, std::uint64_t n, int bins, std::uint64_t seed,
                       unsigned threads = 1);

struct Inequality5Side {
    double lhs = 0.0;
    double rhs = 0.0;
    double stderr_ = 0.0;  // of lhs - rhs
    bool holds = false;
};

struct Inequality5Result {
    double t = 0.0;
    double h = 0.0;
    double p_exceed = 0.0;
    double U0 = 0.0;
    bool U0_simulated = false;
    Inequality5Side copy_x;
    Inequality5Side copy_0;
    bool holds = false;

    nlohmann::json to_json() const;
};

// U0 = U0((0, h]); simulated from an independent 0-delayed process when absent.
Inequality5Result check_inequality5(const InterArrivalModel& model, const BoundCertificate& cert,
                                    double x, double t, double h, std::uint64_t n,
                                    std::uint64_t seed, std::optional<double> U0 = std::nullopt,
                                    unsigned threads = 1);

struct SupermartingaleRow {
    int n = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    bool holds = false;
};

struct SupermartingaleResult {
    double M0 = 0.0;
    double rho = 0.0;
    std::vector<SupermartingaleRow> rows;
    bool holds = false;
    double margin = 0.0;  // min over rows of (M0 + 3 se - mean) / M0

    nlohmann::json to_json() const;
};

SupermartingaleResult check_supermartingale(const InterArrivalModel& model, double beta,
                                            double lambda, double R, double x,
                                            const std::vector<int>& horizons,
                                            std::uint64_t replicas, std::uint64_t seed,
                                            unsigned threads = 1);

struct ExponentialFit {
    double amplitude = 0.0;
    double rate = 0.0;
    double residual = 0.0;  // weighted residual norm of the nonlinear fit
    std::size_t used = 0;
    std::size_t dropped = 0;

    nlohmann::json to_json() const;
};

// Least squares A exp(-rate t); empty weights mean 1 / value^2.
ExponentialFit fit_exponential_rate(const std::vector<double>& t, const std::vector<double>& values,
                                    const std::vector<double>& weights = {});

}  // namespace renewal
