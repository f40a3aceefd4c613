#include "fat/backtest.hpp"

#include "fat/csv.hpp"
#include "fat/parallel.hpp"
#include "fat/stats.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fat {

void BacktestConfig::validate(Eigen::Index n_periods, Eigen::Index n_covariates) const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("invalid config field '" + field + "': " + why);
    };
    if (window_length < static_cast<int>(n_covariates) + 3) {
        fail("window_length", "need L >= p + 3");
    }
    // L == T yields zero windows and an empty report; the CLI layer
    // additionally demands L < T so a useless run fails loudly there.
    if (window_length > n_periods) fail("window_length", "need L <= T");
    if (!(fdr_level > 0.0 && fdr_level < 1.0)) fail("fdr_level", "must lie in (0,1)");
    if (!(lambda >= 0.0 && lambda < 1.0)) fail("lambda", "must lie in [0,1)");
    if (procedure != Procedure::Fat && procedure != Procedure::Unadjusted) {
        fail("procedure", "rolling selection supports fat or unadjusted");
    }
    if (pi_max < 0) fail("pi_max", "must be >= 0");
}

namespace {

int window_pi_max(const BacktestConfig& config) {
    return config.pi_max > 0 ? config.pi_max : default_pi_max(config.window_length);
}

}  // namespace

double strategy_return(const WindowRecord& window, const PanelData& panel,
                       int window_length, ShortLegSign sign) {
    const Eigen::Index realized = window.tau - 1 + window_length;  // 0-based column
    if (realized >= panel.n_periods()) {
        throw std::invalid_argument("strategy_return: realization period out of range");
    }
    auto leg_mean = [&](const std::vector<int>& leg) {
        if (leg.empty()) return 0.0;
        double s = 0.0;
        for (int j : leg) s += panel.responses(j, realized);
        return s / static_cast<double>(leg.size());
    };
    const double long_leg = leg_mean(window.selected_positive);
    const double short_leg = leg_mean(window.selected_negative);
    return sign == ShortLegSign::Plus ? long_leg + short_leg : long_leg - short_leg;
}

BacktestReport rolling_select(const PanelData& panel, const BacktestConfig& config) {
    validate_panel(panel);
    config.validate(panel.n_periods(), panel.n_covariates());
    const int n_windows = static_cast<int>(panel.n_periods()) - config.window_length;

    BacktestReport report;
    report.config = config;
    report.n_units = static_cast<int>(panel.n_units());
    report.windows.resize(static_cast<std::size_t>(n_windows));

    parallel_for(n_windows, config.workers, [&](int w) {
        WindowRecord rec;
        rec.tau = w + 1;
        // The window's covariates are used as-is: re-centering them inside
        // the window would shift every intercept by beta' * (window mean).
        const PanelData sub = panel.period_window(w, config.window_length);
        try {
            const InterceptFit fit = fit_intercepts(sub);
            TestBattery battery;
            if (config.procedure == Procedure::Fat) {
                const GramSpectrum spectrum = gram_eigen(fit.resid_after_x);
                rec.d_tau = select_factor_count(spectrum, window_pi_max(config));
                battery = fat_battery(fit, fit_latent(fit.resid_after_x, rec.d_tau));
            } else {
                battery = unadjusted_battery(fit, &panel.unit_ids);
            }
            const DecisionReport decision =
                storey_threshold(battery.p_values, config.fdr_level, config.lambda);
            rec.threshold = decision.threshold;
            auto [plus, minus] = split_by_sign(decision.rejected, fit.mu_hat);
            rec.selected_positive = std::move(plus);
            rec.selected_negative = std::move(minus);
        } catch (const std::invalid_argument&) {
            rec.flagged = true;
            rec.d_tau = 0;
        }
        rec.strategy_return =
            strategy_return(rec, panel, config.window_length, config.short_leg_sign);
        report.windows[static_cast<std::size_t>(w)] = std::move(rec);
    });
    return report;
}

double BacktestReport::mean_factor_count() const {
    if (windows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& w : windows) s += w.d_tau;
    return s / static_cast<double>(windows.size());
}

double BacktestReport::mean_positive_share() const {
    if (windows.empty() || n_units == 0) return 0.0;
    double s = 0.0;
    for (const auto& w : windows) s += static_cast<double>(w.selected_positive.size());
    return s / (static_cast<double>(windows.size()) * static_cast<double>(n_units));
}

double BacktestReport::mean_negative_share() const {
    if (windows.empty() || n_units == 0) return 0.0;
    double s = 0.0;
    for (const auto& w : windows) s += static_cast<double>(w.selected_negative.size());
    return s / (static_cast<double>(windows.size()) * static_cast<double>(n_units));
}

std::vector<double> BacktestReport::returns() const {
    std::vector<double> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(w.strategy_return);
    return out;
}

StrategyComparison compare_strategies(const BacktestReport& a, const BacktestReport& b) {
    if (a.windows.size() != b.windows.size()) {
        throw std::invalid_argument("compare_strategies: window counts differ");
    }
    const std::size_t n = a.windows.size();
    if (n < 3) {
        throw std::invalid_argument("compare_strategies: need at least 3 aligned windows");
    }
    StrategyComparison cmp;
    cmp.diff_series.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (a.windows[i].tau != b.windows[i].tau) {
            throw std::invalid_argument("compare_strategies: window indices misaligned");
        }
        cmp.diff_series.push_back(a.windows[i].strategy_return -
                                  b.windows[i].strategy_return);
    }
    cmp.mean_diff = mean(cmp.diff_series);
    const double sd = sample_sd(cmp.diff_series);
    if (sd == 0.0) {
        if (cmp.mean_diff == 0.0) {
            cmp.t_stat = 0.0;
            cmp.p_value = 1.0;
        } else {
            // Constant nonzero difference: infinitely significant under the
            // location model; flag it instead of dividing by zero.
            cmp.degenerate = true;
            cmp.t_stat = cmp.mean_diff > 0 ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity();
            cmp.p_value = 0.0;
        }
        return cmp;
    }
    cmp.t_stat = cmp.mean_diff / (sd / std::sqrt(static_cast<double>(n)));
    cmp.p_value = two_sided_p(cmp.t_stat);
    return cmp;
}

std::string backtest_csv(const BacktestReport& primary, const BacktestReport& baseline) {
    std::string out = "tau,r_adj,r_unadj,r_diff,d_tau,n_positive,n_negative,threshold,flagged\n";
    for (std::size_t i = 0; i < primary.windows.size(); ++i) {
        const auto& w = primary.windows[i];
        const double base = baseline.windows[i].strategy_return;
        out += std::to_string(w.tau);
        out += ',' + format_double(w.strategy_return);
        out += ',' + format_double(base);
        out += ',' + format_double(w.strategy_return - base);
        out += ',' + std::to_string(w.d_tau);
        out += ',' + std::to_string(w.selected_positive.size());
        out += ',' + std::to_string(w.selected_negative.size());
        out += ',' + format_double(w.threshold);
        out += ',' + std::string(w.flagged ? "1" : "0");
        out += '\n';
    }
    return out;
}

std::string backtest_summary_json(const BacktestReport& primary,
                                  const BacktestReport& baseline,
                                  const StrategyComparison& comparison) {
    nlohmann::json j;
    j["procedure"] = to_string(primary.config.procedure);
    j["window_length"] = primary.config.window_length;
    j["fdr_level"] = primary.config.fdr_level;
    j["lambda"] = primary.config.lambda;
    j["short_leg_sign"] =
        primary.config.short_leg_sign == ShortLegSign::Plus ? "plus" : "minus";
    j["n_windows"] = primary.windows.size();
    j["n_units"] = primary.n_units;
    j["mean_factor_count"] = primary.mean_factor_count();
    j["mean_positive_share"] = primary.mean_positive_share();
    j["mean_negative_share"] = primary.mean_negative_share();
    j["baseline_mean_positive_share"] = baseline.mean_positive_share();
    j["baseline_mean_negative_share"] = baseline.mean_negative_share();
    j["mean_return"] = primary.windows.empty() ? 0.0 : mean(primary.returns());
    j["baseline_mean_return"] = baseline.windows.empty() ? 0.0 : mean(baseline.returns());
    j["mean_diff"] = comparison.mean_diff;
    j["t_stat"] = comparison.t_stat;
    j["p_value"] = comparison.p_value;
    j["degenerate_diff"] = comparison.degenerate;
    return j.dump(2) + "\n";
}

}  // namespace fat
