#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace fat {

// Standard normal CDF, Phi(x). Computed through erfc so the far tails keep
// full relative accuracy.
double normal_cdf(double x);

// Standard normal quantile, Phi^{-1}(p) for p in (0,1).
// Wichura's PPND16 rational approximation (~1e-15 relative accuracy).
double normal_quantile(double p);

// Two-sided normal p-value 2*Phi(-|stat|), clamped into (0,1] so downstream
// comparisons never see an exact zero from tail underflow.
double two_sided_p(double statistic);

double mean(const std::vector<double>& x);

// Sample standard deviation, divisor n-1.
double sample_sd(const std::vector<double>& x);

// Standard error of the mean: sample_sd / sqrt(n).
double standard_error(const std::vector<double>& x);

// Kolmogorov-Smirnov distance between the empirical CDF of `sample` and a
// reference CDF given as a callable on doubles.
template <typename Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return d;
}

}  // namespace fat
