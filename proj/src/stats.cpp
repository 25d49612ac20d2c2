#include "renewal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "renewal/error.hpp"

namespace renewal::stats {

MeanEstimate mean_estimate(std::span<const double> values) {
    MeanEstimate out;
    out.n = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    return out;
}

double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double effective_n) {
    const double root = std::sqrt(effective_n);
    return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

}  // namespace

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw InvalidInput("ks_one_sample: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return {d, ks_p_value(d, n)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return {d, ks_p_value(d, na * nb / (na + nb))};
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> counts, std::span<const double> probs) {
    if (counts.size() != probs.size() || counts.size() < 2)
        throw InvalidInput("chi_square_gof: need >= 2 matching cells");
    const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
    ChiSquareResult out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double expected = n * probs[i];
        if (!(expected > 0.0)) throw InvalidInput("chi_square_gof: cell with zero expected count");
        const double diff = static_cast<double>(counts[i]) - expected;
        out.statistic += diff * diff / expected;
    }
    out.dof = static_cast<double>(counts.size() - 1);
    boost::math::chi_squared_distribution<double> chi(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(chi, out.statistic));
    return out;
}

double binomial_upper_limit(std::uint64_t successes, std::uint64_t trials, double confidence) {
    if (trials == 0) return 1.0;
    if (successes >= trials) return 1.0;
    using boost::math::binomial_distribution;
    return binomial_distribution<double>::find_upper_bound_on_p(
        static_cast<double>(trials), static_cast<double>(successes), 1.0 - confidence);
}

}  // namespace renewal::stats

namespace renewal::stats {

std::uint64_t binomial_upper_quantile(std::uint64_t trials, double p, double confidence) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial probability outside [0, 1]");
    if (p == 0.0) return 0;
    if (p == 1.0) return trials;
    using namespace boost::math::policies;
    using Pol = policy<discrete_quantile<integer_round_up>>;
    const boost::math::binomial_distribution<double, Pol> bin(static_cast<double>(trials), p);
    return static_cast<std::uint64_t>(boost::math::quantile(bin, confidence));
}

}  // namespace renewal::stats
