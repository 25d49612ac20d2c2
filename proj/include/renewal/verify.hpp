#pragma once

// Monte-Carlo property suite for one certified configuration.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "renewal/bounds.hpp"
#include "renewal/dist.hpp"

namespace renewal {

struct CheckResult {
    std::string name;
    bool passed = false;
    nlohmann::json detail;
};

struct VerifyOptions {
    std::uint64_t replicas = 20000;
    std::uint64_t seed = 1;
    std::vector<double> x{0.0, 2.0, 8.0};
    int t_points = 16;
    unsigned threads = 1;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed = false;

    nlohmann::json to_json() const;
};

// Walk moments, supermartingale, coupling attempt bounds, tail domination, TV and
// renewal-window inequalities, marginal KS tests and the geometric-sum lemma.
// Requires a valid certificate.
VerifyReport run_verification(const InterArrivalModel& model, const BoundCertificate& cert,
                              const VerifyOptions& options);

}  // namespace renewal
