// End-to-end tests of the command-line front end. argv[1] must be the path
// to the built binary; ctest passes it via $<TARGET_FILE:fat>.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "fat/latent.hpp"
#include "fat/panel.hpp"
#include "fat/regression.hpp"
#include "fat/sim.hpp"
#include "fat/testing.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_binary;
fs::path g_dir;

int run_cli(const std::string& args, const std::string& tag) {
    const std::string out = (g_dir / (tag + ".out")).string();
    const std::string err = (g_dir / (tag + ".err")).string();
    const std::string cmd = g_binary + " " + args + " > " + out + " 2> " + err;
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

std::size_t count_lines(const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("show-config prints parseable defaults") {
    CHECK(run_cli("simulate --show-config", "showcfg") == 0);
    const json j = json::parse(slurp(g_dir / "showcfg.out"));
    CHECK(j["n_units"] == 1000);
    CHECK(j["lambda"] == 0.1);
    CHECK(run_cli("analyze --show-config", "showcfg_a") == 0);
    CHECK(run_cli("backtest --show-config", "showcfg_b") == 0);
}

TEST_CASE("simulate writes reports and is byte-deterministic") {
    const std::string invocation =
        "simulate --n-units 120 --n-periods 30 --pi0 0.9 --mu 1 --reps 5 --seed 7"
        " --procedures fat,unadjusted,oracle_fat,pca_pfa --workers 2";
    CHECK(run_cli(invocation + " --out " + (g_dir / "sim_a").string(), "sim_a") == 0);
    CHECK(run_cli(invocation + " --out " + (g_dir / "sim_b").string(), "sim_b") == 0);

    const std::string csv_a = slurp(g_dir / "sim_a" / "replications.csv");
    CHECK(csv_a == slurp(g_dir / "sim_b" / "replications.csv"));
    CHECK(slurp(g_dir / "sim_a" / "summary.json") ==
          slurp(g_dir / "sim_b" / "summary.json"));
    CHECK(count_lines(csv_a) == 1 + 5 * 4);  // header + reps x procedures

    const json manifest = json::parse(slurp(g_dir / "sim_a" / "manifest.json"));
    CHECK(manifest["command"] == "simulate");
    CHECK(manifest["config"]["seed"] == 7);
    CHECK(manifest["outputs"].size() == 2);
}

TEST_CASE("presets run end to end at reduced size") {
    // fig4: three signal arms, four procedures each.
    CHECK(run_cli("simulate --preset fig4 --n-units 150 --n-periods 40 --reps 4"
                  " --seed 9 --out " + (g_dir / "fig4").string(), "fig4") == 0);
    const std::string csv = slurp(g_dir / "fig4" / "replications.csv");
    CHECK(count_lines(csv) == 1 + 3 * 4 * 4);
    const json summary = json::parse(slurp(g_dir / "fig4" / "summary.json"));
    CHECK(summary["preset"] == "fig4");
    CHECK(summary["arms"].size() == 3);

    // table1: eight horizons through the vanishing-threshold search.
    CHECK(run_cli("simulate --preset table1 --n-units 120 --reps 2 --seed 9 --out " +
                  (g_dir / "table1").string(), "table1") == 0);
    const std::string tcsv = slurp(g_dir / "table1" / "replications.csv");
    CHECK(count_lines(tcsv) == 1 + 8 * 2);
    // alpha_t column populated on every record.
    std::istringstream lines(tcsv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        CHECK(line.back() != ',');
    }
}

TEST_CASE("a manifest reproduces its run bit-identically") {
    const fs::path first = g_dir / "replay_a";
    CHECK(run_cli("simulate --n-units 80 --n-periods 25 --pi0 0.9 --reps 3 --seed 3"
                  " --procedures fat --out " + first.string(), "replay_a") == 0);
    const fs::path second = g_dir / "replay_b";
    CHECK(run_cli("simulate --config " + (first / "manifest.json").string() +
                  " --out " + second.string(), "replay_b") == 0);
    CHECK(slurp(first / "replications.csv") == slurp(second / "replications.csv"));
    CHECK(slurp(first / "summary.json") == slurp(second / "summary.json"));
}

TEST_CASE("invalid configuration exits 2 and names the field") {
    CHECK(run_cli("simulate --pi0 1.2 --out " + (g_dir / "bad").string(), "badpi0") == 2);
    CHECK(slurp(g_dir / "badpi0.err").find("pi0") != std::string::npos);
    CHECK(run_cli("simulate --preset fig9 --out " + (g_dir / "bad").string(),
                  "badpreset") == 2);
    CHECK(run_cli("frobnicate", "badsub") == 2);
}

TEST_CASE("analyze reproduces the in-process pipeline on an emitted panel") {
    const fs::path panel_dir = g_dir / "panel";
    CHECK(run_cli("simulate --n-units 90 --n-periods 36 --pi0 0.9 --mu 1.2 --reps 1"
                  " --seed 42 --procedures fat --out " + (g_dir / "sim_c").string() +
                  " --emit-panel " + panel_dir.string(), "sim_c") == 0);

    const double alpha = 0.1, lambda = 0.1;
    std::ostringstream cmd;
    cmd << "analyze " << (panel_dir / "responses.csv").string() << " "
        << (panel_dir / "covariates.csv").string() << " --alpha " << alpha
        << " --lambda " << lambda << " --out " << (g_dir / "ana").string();
    CHECK(run_cli(cmd.str(), "ana") == 0);

    // In-process reference decisions over the same replication.
    fat::SimConfig config;
    config.n_units = 90;
    config.n_periods = 36;
    config.pi0 = 0.9;
    config.mu_signal = 1.2;
    config.seed = 42;
    auto [panel, truth] = fat::generate_dataset(config, 0);
    const fat::InterceptFit fit = fat::fit_intercepts(fat::normalize_covariates(panel));
    const int r_hat = fat::select_factor_count(fat::gram_eigen(fit.resid_after_x),
                                               fat::default_pi_max(36));
    const fat::TestBattery battery =
        fat::fat_battery(fit, fat::fit_latent(fit.resid_after_x, r_hat));
    const fat::DecisionReport decision =
        fat::storey_threshold(battery.p_values, alpha, lambda);

    const json summary = json::parse(slurp(g_dir / "ana" / "summary.json"));
    CHECK(summary["r_hat"] == r_hat);
    CHECK(summary["n_rejected"] == decision.r_of_t);
    CHECK(std::abs(summary["threshold"].get<double>() - decision.threshold) <= 1e-12);

    // Per-unit rejection flags match the in-process rejection set.
    const std::string units = slurp(g_dir / "ana" / "units.csv");
    std::istringstream lines(units);
    std::string line;
    std::getline(lines, line);  // header
    int row = 0, matched = 0;
    std::vector<bool> rejected(90, false);
    for (int idx : decision.rejected) rejected[static_cast<std::size_t>(idx)] = true;
    while (std::getline(lines, line)) {
        const auto last_comma = line.rfind(',');
        const auto prev_comma = line.rfind(',', last_comma - 1);
        const std::string flag = line.substr(prev_comma + 1, last_comma - prev_comma - 1);
        if ((flag == "1") == static_cast<bool>(rejected[static_cast<std::size_t>(row)])) {
            ++matched;
        }
        ++row;
    }
    CHECK(row == 90);
    CHECK(matched == 90);
}

TEST_CASE("analyze override and error paths") {
    const fs::path panel_dir = g_dir / "panel";  // written by the previous case
    std::ostringstream cmd;
    cmd << "analyze " << (panel_dir / "responses.csv").string() << " "
        << (panel_dir / "covariates.csv").string()
        << " --r 0 --out " << (g_dir / "ana_r0").string();
    CHECK(run_cli(cmd.str(), "ana_r0") == 0);
    const json summary = json::parse(slurp(g_dir / "ana_r0" / "summary.json"));
    CHECK(summary["r_hat"] == 0);

    CHECK(run_cli("analyze " + (panel_dir / "responses.csv").string() + " " +
                  (g_dir / "missing.csv").string() + " --out " +
                  (g_dir / "ana_bad").string(), "ana_miss") == 2);
}

TEST_CASE("backtest end to end") {
    const fs::path panel_dir = g_dir / "bt_panel";
    CHECK(run_cli("simulate --n-units 80 --n-periods 60 --p 1 --pi0 0.95 --mu 1.2"
                  " --reps 1 --seed 13 --procedures fat --out " +
                  (g_dir / "sim_bt").string() + " --emit-panel " + panel_dir.string(),
                  "sim_bt") == 0);
    const std::string inputs = (panel_dir / "responses.csv").string() + " " +
                               (panel_dir / "covariates.csv").string();

    CHECK(run_cli("backtest " + inputs + " --window-length 40 --fdr-level 0.2 --out " +
                  (g_dir / "bt_fat").string(), "bt_fat") == 0);
    const std::string csv = slurp(g_dir / "bt_fat" / "windows.csv");
    CHECK(count_lines(csv) == 1 + (60 - 40));

    CHECK(run_cli("backtest " + inputs +
                  " --window-length 40 --fdr-level 0.2 --procedure unadjusted --out " +
                  (g_dir / "bt_un").string(), "bt_un") == 0);
    const json fat_summary = json::parse(slurp(g_dir / "bt_fat" / "summary.json"));
    const json un_summary = json::parse(slurp(g_dir / "bt_un" / "summary.json"));
    // The latent structure inflates the unadjusted selections.
    CHECK(fat_summary["mean_positive_share"] != un_summary["mean_positive_share"]);
    CHECK(un_summary["mean_factor_count"] == 0.0);

    CHECK(run_cli("backtest " + inputs + " --window-length 60 --out " +
                  (g_dir / "bt_bad").string(), "bt_long") == 2);
    CHECK(run_cli("backtest " + inputs + " --window-length 70 --out " +
                  (g_dir / "bt_bad").string(), "bt_longer") == 2);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-fat-binary>\n");
        return 1;
    }
    g_binary = argv[1];
    g_dir = fs::temp_directory_path() / "fat_cli_tests";
    fs::remove_all(g_dir);
    fs::create_directories(g_dir);

    doctest::Context context;
    context.applyCommandLine(1, argv);
    return context.run();
}
