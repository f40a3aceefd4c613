#pragma once

#include "fat/panel.hpp"
#include "fat/testing.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fat {

enum class ShortLegSign {
    Plus,   // add the short leg's mean return (the printed convention)
    Minus,  // conventional long-short: subtract it
};

struct BacktestConfig {
    int window_length = 120;            // L
    double fdr_level = 0.20;            // nominal FDR for the window selection
    Procedure procedure = Procedure::Fat;  // Fat or Unadjusted
    double lambda = 0.1;                // Storey tuning parameter
    ShortLegSign short_leg_sign = ShortLegSign::Plus;
    int pi_max = 0;                     // 0 = min(15, L/2)
    int workers = 0;                    // 0 = hardware concurrency

    void validate(Eigen::Index n_periods, Eigen::Index n_covariates) const;
};

// One rolling window: selections made on periods tau..tau+L-1 (1-based),
// realized at period tau+L.
struct WindowRecord {
    int tau = 0;
    int d_tau = 0;  // selected latent factor count
    std::vector<int> selected_positive;  // units rejected with mu_hat > 0
    std::vector<int> selected_negative;
    double threshold = 0.0;
    double strategy_return = 0.0;
    bool flagged = false;  // window skipped (rank-deficient covariates)
};

struct BacktestReport {
    BacktestConfig config;
    int n_units = 0;
    std::vector<WindowRecord> windows;  // ordered by tau

    double mean_factor_count() const;
    double mean_positive_share() const;  // mean |S+| / N
    double mean_negative_share() const;
    std::vector<double> returns() const;
};

struct StrategyComparison {
    std::vector<double> diff_series;  // aligned by window
    double mean_diff = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    bool degenerate = false;  // zero-variance difference series
};

// Fits the chosen procedure on every rolling window and splits the
// rejections by the sign of the intercept estimate. Windows whose covariate
// block is rank deficient are flagged and left empty.
BacktestReport rolling_select(const PanelData& panel, const BacktestConfig& config);

// Equal-weight realized return of one window's selections at period tau+L.
// An empty leg contributes zero.
double strategy_return(const WindowRecord& window, const PanelData& panel,
                       int window_length, ShortLegSign sign);

// Mean of the per-window return difference with a two-sided normal p-value
// for location zero. Throws if fewer than 3 aligned windows exist.
StrategyComparison compare_strategies(const BacktestReport& a, const BacktestReport& b);

// Stable on-disk schemas.
std::string backtest_csv(const BacktestReport& primary, const BacktestReport& baseline);
std::string backtest_summary_json(const BacktestReport& primary,
                                  const BacktestReport& baseline,
                                  const StrategyComparison& comparison);

}  // namespace fat
