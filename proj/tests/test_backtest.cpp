#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fat/backtest.hpp"
#include "fat/rng.hpp"
#include "fat/sim.hpp"
#include "fat/stats.hpp"

#include <algorithm>
#include <random>

using namespace fat;

namespace {

// Fund-style fixture: one observed market factor, one latent factor, a few
// planted positive-alpha units in front.
PanelData fund_panel(int n, int t, int n_skilled, double alpha_size,
                     std::uint64_t seed, GroundTruth* truth_out = nullptr) {
    SimConfig c;
    c.n_units = n;
    c.n_periods = t;
    c.n_covariates = 1;
    c.n_latent = 1;
    c.pi0 = 1.0 - static_cast<double>(n_skilled) / static_cast<double>(n);
    c.mu_signal = alpha_size;
    c.seed = seed;
    auto [panel, truth] = generate_dataset(c, 0);
    if (truth_out) *truth_out = truth;
    return panel;
}

BacktestReport report_with_returns(const std::vector<double>& returns) {
    BacktestReport r;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        WindowRecord w;
        w.tau = static_cast<int>(i) + 1;
        w.strategy_return = returns[i];
        r.windows.push_back(w);
    }
    return r;
}

}  // namespace

TEST_CASE("window count is T - L") {
    PanelData panel = fund_panel(30, 22, 0, 0.0, 1);
    BacktestConfig config;
    config.window_length = 20;
    config.fdr_level = 0.2;
    config.procedure = Procedure::Unadjusted;

    BacktestReport r = rolling_select(panel, config);
    REQUIRE(r.windows.size() == 2);
    CHECK(r.windows[0].tau == 1);
    CHECK(r.windows[1].tau == 2);

    // T == L: zero windows, empty report.
    PanelData exact = fund_panel(30, 20, 0, 0.0, 1);
    BacktestReport empty = rolling_select(exact, config);
    CHECK(empty.windows.empty());

    // L > T is a config error.
    PanelData shorter = fund_panel(30, 18, 0, 0.0, 1);
    CHECK_THROWS_WITH_AS(rolling_select(shorter, config),
                         doctest::Contains("window_length"), std::invalid_argument);
}

TEST_CASE("strategy_return equal-weights each leg") {
    PanelData panel;
    panel.responses.resize(3, 6);
    panel.responses.setZero();
    panel.responses(0, 5) = 0.02;
    panel.responses(1, 5) = 0.04;
    panel.responses(2, 5) = -0.01;
    panel.covariates.resize(6, 0);
    panel.unit_ids = {"a", "b", "c"};
    panel.period_ids = {"1", "2", "3", "4", "5", "6"};

    WindowRecord w;
    w.tau = 1;
    w.selected_positive = {0, 1};

    SUBCASE("long leg only") {
        CHECK(strategy_return(w, panel, 5, ShortLegSign::Plus) ==
              doctest::Approx(0.03).epsilon(1e-15));
    }
    SUBCASE("both legs empty") {
        WindowRecord none;
        none.tau = 1;
        CHECK(strategy_return(none, panel, 5, ShortLegSign::Plus) == 0.0);
    }
    SUBCASE("short-leg sign toggle") {
        w.selected_negative = {2};
        CHECK(strategy_return(w, panel, 5, ShortLegSign::Plus) ==
              doctest::Approx(0.02).epsilon(1e-15));
        CHECK(strategy_return(w, panel, 5, ShortLegSign::Minus) ==
              doctest::Approx(0.04).epsilon(1e-15));
    }
    SUBCASE("realization past the panel end") {
        WindowRecord late;
        late.tau = 2;
        CHECK_THROWS_AS(strategy_return(late, panel, 5, ShortLegSign::Plus),
                        std::invalid_argument);
    }
}

TEST_CASE("compare_strategies on constructed series") {
    SUBCASE("identical strategies") {
        auto a = report_with_returns({0.01, 0.02, -0.01, 0.0});
        StrategyComparison cmp = compare_strategies(a, a);
        CHECK(cmp.mean_diff == 0.0);
        CHECK(cmp.p_value == 1.0);
        CHECK(!cmp.degenerate);
    }
    SUBCASE("constant positive difference is flagged") {
        auto a = report_with_returns({0.01, 0.01, 0.01});
        auto b = report_with_returns({0.0, 0.0, 0.0});
        StrategyComparison cmp = compare_strategies(a, b);
        CHECK(cmp.degenerate);
        CHECK(cmp.p_value == 0.0);
        CHECK(cmp.mean_diff == doctest::Approx(0.01).epsilon(1e-12));
    }
    SUBCASE("random series match the direct formula") {
        std::mt19937_64 rng = make_stream(404, 0);
        std::normal_distribution<double> gauss;
        std::vector<double> ra, rb;
        for (int i = 0; i < 95; ++i) {
            ra.push_back(gauss(rng) * 0.01 + 0.002);
            rb.push_back(gauss(rng) * 0.01);
        }
        StrategyComparison cmp =
            compare_strategies(report_with_returns(ra), report_with_returns(rb));
        std::vector<double> diff(95);
        for (int i = 0; i < 95; ++i) diff[i] = ra[i] - rb[i];
        const double m = mean(diff);
        const double expected_t = m / (sample_sd(diff) / std::sqrt(95.0));
        CHECK(cmp.t_stat == doctest::Approx(expected_t).epsilon(1e-10));
        CHECK(cmp.p_value == doctest::Approx(two_sided_p(expected_t)).epsilon(1e-12));
    }
    SUBCASE("too few windows") {
        auto a = report_with_returns({0.01, 0.02});
        CHECK_THROWS_AS(compare_strategies(a, a), std::invalid_argument);
    }
    SUBCASE("misaligned windows") {
        auto a = report_with_returns({0.01, 0.02, 0.03});
        auto b = report_with_returns({0.01, 0.02, 0.03});
        b.windows[2].tau = 9;
        CHECK_THROWS_AS(compare_strategies(a, b), std::invalid_argument);
    }
}

TEST_CASE("selections grow with the FDR level, window by window") {
    PanelData panel = fund_panel(80, 70, 4, 1.2, 7070);
    BacktestConfig lo;
    lo.window_length = 40;
    lo.fdr_level = 0.05;
    BacktestConfig hi = lo;
    hi.fdr_level = 0.3;
    BacktestReport rlo = rolling_select(panel, lo);
    BacktestReport rhi = rolling_select(panel, hi);
    REQUIRE(rlo.windows.size() == rhi.windows.size());
    for (std::size_t w = 0; w < rlo.windows.size(); ++w) {
        for (int idx : rlo.windows[w].selected_positive) {
            const auto& big = rhi.windows[w].selected_positive;
            CHECK(std::find(big.begin(), big.end(), idx) != big.end());
        }
        for (int idx : rlo.windows[w].selected_negative) {
            const auto& big = rhi.windows[w].selected_negative;
            CHECK(std::find(big.begin(), big.end(), idx) != big.end());
        }
    }
}

TEST_CASE("window selections ignore data outside the window") {
    PanelData panel = fund_panel(60, 50, 3, 1.5, 909);
    BacktestConfig config;
    config.window_length = 30;
    config.fdr_level = 0.2;

    const int probe = 10;  // tau = 11, covers periods 11..40 (1-based)
    BacktestReport before = rolling_select(panel, config);

    // Surgery: permute the periods before the window and after its
    // realization period, leaving periods 11..41 intact.
    PanelData cut = panel;
    std::mt19937_64 rng = make_stream(11, 0);
    std::vector<int> head{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::shuffle(head.begin(), head.end(), rng);
    std::vector<int> tail;
    for (int s = probe + config.window_length + 1; s < 50; ++s) tail.push_back(s);
    std::shuffle(tail.begin(), tail.end(), rng);
    std::vector<int> order;
    for (int s : head) order.push_back(s);
    for (int s = probe; s <= probe + config.window_length; ++s) order.push_back(s);
    for (int s : tail) order.push_back(s);
    REQUIRE(order.size() == 50);
    for (int s = 0; s < 50; ++s) {
        cut.responses.col(s) = panel.responses.col(order[static_cast<std::size_t>(s)]);
        cut.covariates.row(s) = panel.covariates.row(order[static_cast<std::size_t>(s)]);
    }

    BacktestReport after = rolling_select(cut, config);
    CHECK(after.windows[probe].selected_positive == before.windows[probe].selected_positive);
    CHECK(after.windows[probe].selected_negative == before.windows[probe].selected_negative);
    CHECK(after.windows[probe].d_tau == before.windows[probe].d_tau);
    CHECK(after.windows[probe].strategy_return ==
          doctest::Approx(before.windows[probe].strategy_return).epsilon(1e-12));
}

TEST_CASE("planted skilled funds dominate the positive selections") {
    GroundTruth truth;
    PanelData panel = fund_panel(100, 160, 3, 1.2, 31415, &truth);
    BacktestConfig config;
    config.window_length = 80;
    config.fdr_level = 0.2;
    BacktestReport r = rolling_select(panel, config);

    int windows_with_all = 0;
    for (const auto& w : r.windows) {
        bool all = true;
        for (int planted : truth.nonnull_set) {
            if (std::find(w.selected_positive.begin(), w.selected_positive.end(),
                          planted) == w.selected_positive.end()) {
                all = false;
            }
        }
        if (all) ++windows_with_all;
    }
    CHECK(windows_with_all >= static_cast<int>(r.windows.size() / 2));
}

TEST_CASE("window reports are identical across worker counts") {
    PanelData panel = fund_panel(50, 48, 2, 1.2, 606);
    BacktestConfig config;
    config.window_length = 30;
    config.fdr_level = 0.2;
    config.workers = 1;
    BacktestReport serial = rolling_select(panel, config);
    config.workers = 4;
    BacktestReport parallel = rolling_select(panel, config);
    CHECK(backtest_csv(serial, serial) == backtest_csv(parallel, parallel));
}

TEST_CASE("csv and summary share window counts") {
    PanelData panel = fund_panel(40, 34, 2, 1.5, 27);
    BacktestConfig config;
    config.window_length = 30;
    config.fdr_level = 0.2;
    BacktestReport fat_run = rolling_select(panel, config);
    BacktestConfig base = config;
    base.procedure = Procedure::Unadjusted;
    BacktestReport unadj_run = rolling_select(panel, base);
    StrategyComparison cmp = compare_strategies(fat_run, unadj_run);

    const std::string csv = backtest_csv(fat_run, unadj_run);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
          1 + fat_run.windows.size());
    const std::string js = backtest_summary_json(fat_run, unadj_run, cmp);
    CHECK(js.find("mean_factor_count") != std::string::npos);
    CHECK(js.find("p_value") != std::string::npos);
}

TEST_CASE("config validation rejects bad windows") {
    PanelData panel = fund_panel(10, 30, 0, 0.0, 3);
    BacktestConfig config;
    config.window_length = 3;  // < p + 3 = 4
    CHECK_THROWS_WITH_AS(rolling_select(panel, config),
                         doctest::Contains("window_length"), std::invalid_argument);
    config.window_length = 20;
    config.fdr_level = 0.0;
    CHECK_THROWS_WITH_AS(rolling_select(panel, config), doctest::Contains("fdr_level"),
                         std::invalid_argument);
    config.fdr_level = 0.2;
    config.procedure = Procedure::OracleFat;
    CHECK_THROWS_WITH_AS(rolling_select(panel, config), doctest::Contains("procedure"),
                         std::invalid_argument);
}
