#include "fat/testing.hpp"

#include "fat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fat {

namespace {

// Shared evaluation of the adjusted statistic so that plugging the true
// quantities into the plug-in battery reproduces the oracle battery bitwise.
TestBattery adjusted_battery(const InterceptFit& fit, const Eigen::MatrixXd& scores,
                             const Eigen::MatrixXd& loadings,
                             const Eigen::VectorXd& idio_variances,
                             Procedure procedure) {
    const Eigen::Index n = fit.n_units();
    if (loadings.rows() != n || idio_variances.size() != n) {
        throw std::invalid_argument("adjusted_battery: unit count mismatch");
    }
    const double scale = std::sqrt(fit.one_q_one);
    const double inv_scale = 1.0 / scale;
    // adjustment_i = 1'Q S g_i, assembled as (1'Q S) g_i.
    Eigen::VectorXd adjustment;
    if (scores.cols() > 0) {
        adjustment = loadings * (scores.transpose() * fit.q_one);
    } else {
        adjustment = Eigen::VectorXd::Zero(n);
    }

    TestBattery battery;
    battery.procedure = procedure;
    battery.statistics.resize(n);
    battery.p_values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(idio_variances(i) > 0.0)) {
            throw std::invalid_argument("adjusted_battery: unit " + std::to_string(i + 1) +
                                        " has non-positive idiosyncratic variance");
        }
        battery.statistics(i) = (scale * fit.mu_hat(i) - inv_scale * adjustment(i)) /
                                std::sqrt(idio_variances(i));
        battery.p_values(i) = two_sided_p(battery.statistics(i));
    }
    return battery;
}

}  // namespace

TestBattery fat_battery(const InterceptFit& fit, const LatentFactorFit& latent) {
    return adjusted_battery(fit, latent.scores, latent.loadings, latent.sigma_eta_diag,
                            Procedure::Fat);
}

TestBattery oracle_battery(const InterceptFit& fit, const GroundTruth& truth) {
    if (truth.latent_scores.rows() != fit.q_one.size()) {
        throw std::invalid_argument("oracle_battery: truth scores do not match the panel");
    }
    TestBattery battery = adjusted_battery(fit, truth.latent_scores, truth.latent_loadings,
                                           truth.idio_variances, Procedure::OracleFat);
    return battery;
}

double estimate_pi0(const Eigen::VectorXd& p_values, double lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("estimate_pi0: lambda must lie in [0,1)");
    }
    const double n = static_cast<double>(p_values.size());
    const double r_lambda =
        static_cast<double>((p_values.array() <= lambda).count());
    return (n - r_lambda) / ((1.0 - lambda) * n);
}

double fdr_estimate(const Eigen::VectorXd& p_values, double lambda, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("fdr_estimate: t must lie in [0,1]");
    }
    const double n = static_cast<double>(p_values.size());
    const double r_t = static_cast<double>((p_values.array() <= t).count());
    return n * estimate_pi0(p_values, lambda) * t / std::max(r_t, 1.0);
}

namespace {

std::vector<int> collect_rejections(const Eigen::VectorXd& p_values, double t) {
    std::vector<int> rejected;
    for (Eigen::Index i = 0; i < p_values.size(); ++i) {
        if (p_values(i) <= t) rejected.push_back(static_cast<int>(i));
    }
    return rejected;
}

std::vector<double> sorted_p(const Eigen::VectorXd& p_values) {
    std::vector<double> sorted(p_values.data(), p_values.data() + p_values.size());
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

}  // namespace

DecisionReport storey_threshold(const Eigen::VectorXd& p_values, double alpha,
                                double lambda) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("storey_threshold: alpha must lie in (0,1)");
    }
    const double n = static_cast<double>(p_values.size());
    const double pi0 = estimate_pi0(p_values, lambda);
    const std::vector<double> sorted = sorted_p(p_values);

    // The FDR estimate rises linearly between order statistics and jumps
    // down only at them, so the supremum is attained at an order statistic.
    double threshold = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        // With ties, R(p_(k)) is the index of the last equal entry.
        if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
        const double r_t = static_cast<double>(k + 1);
        const double est = n * pi0 * sorted[k] / std::max(r_t, 1.0);
        if (est <= alpha) threshold = sorted[k];
    }

    DecisionReport report;
    report.threshold = threshold;
    report.lambda = lambda;
    report.pi0_hat = pi0;
    report.rejected = collect_rejections(p_values, threshold);
    report.r_of_t = static_cast<int>(report.rejected.size());
    report.fdr_hat =
        n * pi0 * threshold / std::max(static_cast<double>(report.r_of_t), 1.0);
    return report;
}

DecisionReport decide_at_threshold(const Eigen::VectorXd& p_values, double t,
                                   double lambda) {
    DecisionReport report;
    report.threshold = t;
    report.lambda = lambda;
    report.pi0_hat = estimate_pi0(p_values, lambda);
    report.rejected = collect_rejections(p_values, t);
    report.r_of_t = static_cast<int>(report.rejected.size());
    report.fdr_hat = fdr_estimate(p_values, lambda, t);
    return report;
}

std::optional<double> pfa_fdp_estimate(const InterceptFit& fit,
                                       const LatentFactorFit& latent, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("pfa_fdp_estimate: t must lie in [0,1]");
    }
    const TestBattery unadj = unadjusted_battery(fit);
    const double r_u = static_cast<double>((unadj.p_values.array() <= t).count());
    if (r_u < 1.0) return std::nullopt;

    const Eigen::Index n = fit.n_units();
    const double inv_scale = 1.0 / std::sqrt(fit.one_q_one);
    Eigen::VectorXd adjustment;  // a_i = (1'Q1)^{-1/2} 1'Q S g_i
    if (latent.scores.cols() > 0) {
        adjustment = inv_scale * (latent.loadings * (latent.scores.transpose() * fit.q_one));
    } else {
        adjustment = Eigen::VectorXd::Zero(n);
    }

    const double z = normal_quantile(t / 2.0);  // lower-tail quantile, z <= 0
    double numerator = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double se = std::sqrt(fit.sigma_e_diag(i));
        const double seta = std::sqrt(latent.sigma_eta_diag(i));
        numerator += normal_cdf((se * z + adjustment(i)) / seta) +
                     normal_cdf((se * z - adjustment(i)) / seta);
    }
    return std::min(numerator, r_u) / r_u;
}

DecisionReport pfa_threshold(const InterceptFit& fit, const LatentFactorFit& latent,
                             double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("pfa_threshold: alpha must lie in (0,1)");
    }
    const TestBattery unadj = unadjusted_battery(fit);
    const std::vector<double> sorted = sorted_p(unadj.p_values);

    double threshold = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
        const auto est = pfa_fdp_estimate(fit, latent, sorted[k]);
        if (est && *est <= alpha) threshold = sorted[k];
    }

    DecisionReport report;
    report.threshold = threshold;
    report.lambda = std::numeric_limits<double>::quiet_NaN();
    report.pi0_hat = std::numeric_limits<double>::quiet_NaN();
    report.rejected = collect_rejections(unadj.p_values, threshold);
    report.r_of_t = static_cast<int>(report.rejected.size());
    const auto est = pfa_fdp_estimate(fit, latent, threshold);
    report.fdr_hat = est ? *est : 0.0;
    return report;
}

DecisionReport confusion(DecisionReport report, const Eigen::VectorXd& p_values,
                         const GroundTruth& truth) {
    if (truth.intercepts.size() != p_values.size()) {
        throw std::invalid_argument("confusion: truth does not cover all units");
    }
    ConfusionMetrics m;
    for (int idx : report.rejected) {
        if (idx < 0 || idx >= truth.intercepts.size()) {
            throw std::invalid_argument("confusion: rejected index out of range");
        }
        if (truth.intercepts(idx) != 0.0) {
            ++m.s;
        } else {
            ++m.v;
        }
    }
    m.fdp = static_cast<double>(m.v) /
            std::max(static_cast<double>(report.r_of_t), 1.0);
    if (truth.n_nonnull() > 0) {
        m.power = static_cast<double>(m.s) / static_cast<double>(truth.n_nonnull());
    }
    report.truth_metrics = m;
    return report;
}

std::pair<std::vector<int>, std::vector<int>> split_by_sign(
    const std::vector<int>& rejected, const Eigen::VectorXd& mu_hat) {
    std::vector<int> plus, minus;
    for (int idx : rejected) {
        if (mu_hat(idx) > 0.0) {
            plus.push_back(idx);
        } else {
            minus.push_back(idx);
        }
    }
    return {plus, minus};
}

SplitSampleResult split_sample_fat_battery(const PanelData& panel, int pi_max) {
    const Eigen::Index t = panel.n_periods();
    std::vector<Eigen::Index> even, odd;
    for (Eigen::Index k = 0; k < t; ++k) {
        (k % 2 == 0 ? even : odd).push_back(k);
    }

    auto subset = [&](const std::vector<Eigen::Index>& keep) {
        PanelData sub;
        sub.responses.resize(panel.n_units(), static_cast<Eigen::Index>(keep.size()));
        sub.covariates.resize(static_cast<Eigen::Index>(keep.size()), panel.n_covariates());
        sub.unit_ids = panel.unit_ids;
        sub.covariate_ids = panel.covariate_ids;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            sub.responses.col(static_cast<Eigen::Index>(j)) = panel.responses.col(keep[j]);
            sub.covariates.row(static_cast<Eigen::Index>(j)) = panel.covariates.row(keep[j]);
            sub.period_ids.push_back(panel.period_ids[keep[j]]);
        }
        return sub;
    };

    // Estimation half: factor count, loadings, idiosyncratic variances.
    const PanelData estimation = subset(even);
    const InterceptFit est_fit = fit_intercepts(estimation);
    const GramSpectrum spectrum = gram_eigen(est_fit.resid_after_x);
    const int r = select_factor_count(
        spectrum, std::min<int>(pi_max, static_cast<int>(estimation.n_periods()) - 1));
    const LatentFactorFit est_latent = fit_latent(est_fit.resid_after_x, r);

    // Statistics half: intercepts plus per-period scores recovered by
    // cross-sectional regression of its residuals on the estimated loadings.
    const PanelData inference = subset(odd);
    InterceptFit inf_fit = fit_intercepts(inference);
    const Eigen::MatrixXd gram =
        est_latent.loadings.transpose() * est_latent.loadings;  // r x r
    const Eigen::MatrixXd scores =
        gram.ldlt().solve(est_latent.loadings.transpose() * inf_fit.resid_after_x.transpose())
            .transpose();  // T_inf x r

    SplitSampleResult result;
    result.battery = adjusted_battery(inf_fit, scores, est_latent.loadings,
                                      est_latent.sigma_eta_diag, Procedure::Fat);
    result.fit = std::move(inf_fit);
    result.r_hat = r;
    return result;
}

}  // namespace fat
