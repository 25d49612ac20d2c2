#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace renewal::stats {

struct MeanEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

// Sample mean and standard error, summed in index order.
MeanEstimate mean_estimate(std::span<const double> values);

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

// Pearson goodness of fit of counts against cell probabilities (which must sum to 1).
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> counts, std::span<const double> probs);

// One-sided Clopper-Pearson upper confidence limit for a binomial proportion.
double binomial_upper_limit(std::uint64_t successes, std::uint64_t trials, double confidence);
// Smallest k with P(Bin(trials, p) <= k) >= confidence.
std::uint64_t binomial_upper_quantile(std::uint64_t trials, double p, double confidence);

}  // namespace renewal::stats
