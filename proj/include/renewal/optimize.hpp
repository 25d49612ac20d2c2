#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "renewal/bounds.hpp"
#include "renewal/dist.hpp"

namespace renewal {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct SearchSpace {
    Range beta{1e-3, 0.0};  // hi <= 0 means "use the model's alpha"
    Range delta{0.05, 0.95};
    Range theta{1e-3, 1.0};
    int beta_points = 24;
    int delta_points = 16;
    int theta_points = 16;
    int refine_top = 8;
    std::vector<UniformComponent> components;

    nlohmann::json to_json() const;
};

// Evenly spaced values; a single point sits at lo.
std::vector<double> linspace(double lo, double hi, int n);
std::vector<double> logspace(double lo, double hi, int n);

struct ComponentGrid {
    std::vector<double> c;
    std::vector<double> L;
    std::vector<double> eta_tilde;
};

// Cartesian product filtered to c >= L and a nonnegative domination margin,
// recomputed for every candidate.
std::vector<UniformComponent> enumerate_components(const InterArrivalModel& model,
                                                   const ComponentGrid& grid,
                                                   int grid_points = 1001);

// theta delta beta when the certificate is valid, else -infinity.
double rate_objective(const InterArrivalModel& model, const UniformComponent& comp,
                      const BoundParams& params);

struct GridPoint {
    BoundParams params;
    std::size_t component = 0;
    double q = 0.0;
    double objective = 0.0;
};

struct OptimizeResult {
    bool feasible = false;
    BoundParams params;
    UniformComponent comp;
    std::optional<BoundCertificate> cert;
    double best_q = 0.0;          // smallest q seen when infeasible
    double best_grid_objective = 0.0;
    std::size_t evaluations = 0;
    std::vector<GridPoint> grid;  // filled when requested

    nlohmann::json to_json() const;
};

struct OptimizeOptions {
    int budget = 400;         // simplex evaluations per refined start
    unsigned threads = 1;
    bool record_grid = false;
};

OptimizeResult optimize_rate(const InterArrivalModel& model, const SearchSpace& space,
                             const OptimizeOptions& options = {});

}  // namespace renewal
