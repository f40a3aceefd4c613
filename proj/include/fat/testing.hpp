#pragma once

#include "fat/battery.hpp"
#include "fat/latent.hpp"
#include "fat/panel.hpp"
#include "fat/regression.hpp"

#include <optional>
#include <vector>

namespace fat {

// Counts against simulation truth for one rejection set.
struct ConfusionMetrics {
    int v = 0;       // false rejections
    int s = 0;       // true rejections
    double fdp = 0;  // v / max(r, 1)
    std::optional<double> power;  // s / N1, absent when N1 == 0
};

// One thresholding decision. pi0_hat and fdr_hat are the raw estimates
// (deliberately not clipped to [0,1]); display layers may cap them.
struct DecisionReport {
    double threshold = 0.0;
    double lambda = 0.0;
    double pi0_hat = 0.0;
    double fdr_hat = 0.0;
    std::vector<int> rejected;  // unit indices with p <= threshold
    int r_of_t = 0;             // |rejected|
    std::optional<ConfusionMetrics> truth_metrics;
};

// Factor-adjusted statistics: subtract the estimated common-factor
// contribution from the scaled intercept and studentize by the idiosyncratic
// standard deviation:
//   stat_i = [ (1'Q1)^{1/2} mu_i - (1'Q1)^{-1/2} 1'Q Z g_i ] / sigma_ii^{1/2}.
TestBattery fat_battery(const InterceptFit& fit, const LatentFactorFit& latent);

// Same formula evaluated with the simulation truth (Z, loadings, variances).
TestBattery oracle_battery(const InterceptFit& fit, const GroundTruth& truth);

// Storey null-proportion estimate pi0(lambda) = (N - R(lambda)) / ((1-lambda) N).
double estimate_pi0(const Eigen::VectorXd& p_values, double lambda);

// Point FDR estimate N * pi0 * t / (R(t) v 1).
double fdr_estimate(const Eigen::VectorXd& p_values, double lambda, double t);

// Data-driven threshold: the largest p-value order statistic whose FDR
// estimate is <= alpha (0 and an empty rejection set when none qualifies).
DecisionReport storey_threshold(const Eigen::VectorXd& p_values, double alpha,
                                double lambda);

// Decision at a fixed threshold t: rejections and the FDR estimate there.
DecisionReport decide_at_threshold(const Eigen::VectorXd& p_values, double t,
                                   double lambda);

// Factor-approximation FDP estimate for the *unadjusted* p-values at
// threshold t; nullopt when R_u(t) = 0 (no rejections, ratio undefined).
std::optional<double> pfa_fdp_estimate(const InterceptFit& fit,
                                       const LatentFactorFit& latent, double t);

// Threshold scan of pfa_fdp_estimate over the unadjusted p-value order
// statistics, analogous to storey_threshold.
DecisionReport pfa_threshold(const InterceptFit& fit, const LatentFactorFit& latent,
                             double alpha);

// Attaches V, S, FDP, power to a report. Throws on index mismatch.
DecisionReport confusion(DecisionReport report, const Eigen::VectorXd& p_values,
                         const GroundTruth& truth);

// Splits rejected indices by the sign of the point estimate: mu > 0 goes to
// the first set, the rest to the second.
std::pair<std::vector<int>, std::vector<int>> split_by_sign(
    const std::vector<int>& rejected, const Eigen::VectorXd& mu_hat);

// Sample-splitting variant: even-indexed periods estimate the factor
// structure (loadings, idiosyncratic variances), odd-indexed periods supply
// the intercepts and statistics. Off by default everywhere; exposed for
// diagnostics.
struct SplitSampleResult {
    InterceptFit fit;  // from the statistics half
    TestBattery battery;
    int r_hat = 0;
};
SplitSampleResult split_sample_fat_battery(const PanelData& panel, int pi_max);

}  // namespace fat
