// Batch front end: simulate | analyze | backtest. Every run writes its
// machine-readable reports plus a manifest pinning the resolved
// configuration, seed, input digests, and tool version.

#include "fat/backtest.hpp"
#include "fat/csv.hpp"
#include "fat/panel.hpp"
#include "fat/sim.hpp"
#include "fat/testing.hpp"
#include "fat/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInvalidConfig = 2;
constexpr int kExitRuntimeFailure = 3;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

fs::path default_output_dir() {
    if (const char* env = std::getenv("FAT_OUTPUT_DIR")) return fs::path(env);
    return fs::path(".");
}

json load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
    json j = json::parse(in);
    // A manifest from an earlier run is accepted directly; its resolved
    // configuration lives under "config".
    if (j.contains("config") && j["config"].is_object()) return j["config"];
    return j;
}

struct ManifestWriter {
    std::string command;
    std::vector<std::string> argv;
    json config;
    json inputs = json::object();
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void write(const fs::path& out_dir) const {
        json m;
        m["tool"] = "fat";
        m["version"] = fat::kVersion;
        m["command"] = command;
        m["argv"] = argv;
        m["config"] = config;
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        m["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
        fat::write_text_file(out_dir / "manifest.json", m.dump(2) + "\n");
    }
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + dir.string());
}

// ---- simulate --------------------------------------------------------

struct SimulateOptions {
    std::string preset;
    std::string config_file;
    std::string out_dir;
    std::string emit_panel_dir;
    std::string procedures = "fat";
    bool show_config = false;
    fat::SimConfig config;
};

json sim_config_json(const SimulateOptions& o) {
    const fat::SimConfig& c = o.config;
    json j{{"preset", o.preset},
           {"procedures", o.procedures},
           {"n_units", c.n_units},
           {"n_periods", c.n_periods},
           {"pi0", c.pi0},
           {"mu_signal", c.mu_signal},
           {"n_latent", c.n_latent},
           {"n_covariates", c.n_covariates},
           {"rho", c.rho},
           {"lambda", c.lambda},
           {"alpha", c.alpha},
           {"n_reps", c.n_reps},
           {"seed", c.seed},
           {"pi_max", c.pi_max},
           {"workers", c.workers}};
    j["r_override"] = c.r_override ? json(*c.r_override) : json();
    j["fixed_threshold"] = c.fixed_threshold ? json(*c.fixed_threshold) : json();
    return j;
}

void apply_sim_config_json(const json& j, SimulateOptions& o) {
    fat::SimConfig& c = o.config;
    if (j.contains("preset") && !j["preset"].is_null())
        o.preset = j["preset"].get<std::string>();
    if (j.contains("procedures") && !j["procedures"].is_null())
        o.procedures = j["procedures"].get<std::string>();
    if (j.contains("n_units")) c.n_units = j["n_units"];
    if (j.contains("n_periods")) c.n_periods = j["n_periods"];
    if (j.contains("pi0")) c.pi0 = j["pi0"];
    if (j.contains("mu_signal")) c.mu_signal = j["mu_signal"];
    if (j.contains("n_latent")) c.n_latent = j["n_latent"];
    if (j.contains("n_covariates")) c.n_covariates = j["n_covariates"];
    if (j.contains("rho")) c.rho = j["rho"];
    if (j.contains("lambda")) c.lambda = j["lambda"];
    if (j.contains("alpha")) c.alpha = j["alpha"];
    if (j.contains("n_reps")) c.n_reps = j["n_reps"];
    if (j.contains("seed")) c.seed = j["seed"];
    if (j.contains("pi_max")) c.pi_max = j["pi_max"];
    if (j.contains("workers")) c.workers = j["workers"];
    if (j.contains("r_override") && !j["r_override"].is_null())
        c.r_override = j["r_override"].get<int>();
    if (j.contains("fixed_threshold") && !j["fixed_threshold"].is_null())
        c.fixed_threshold = j["fixed_threshold"].get<double>();
}

std::vector<fat::Procedure> parse_procedures(const std::string& list) {
    std::vector<fat::Procedure> out;
    std::string cur;
    std::istringstream in(list);
    while (std::getline(in, cur, ',')) {
        if (!cur.empty()) out.push_back(fat::procedure_from_string(cur));
    }
    if (out.empty()) {
        throw std::invalid_argument("invalid config field 'procedures': empty list");
    }
    return out;
}

std::vector<fat::Procedure> preset_procedures(const std::string& preset) {
    if (preset == "fig1") return {fat::Procedure::Fat, fat::Procedure::OracleFat};
    if (preset == "fig2") return {fat::Procedure::Fat};
    return {fat::Procedure::Fat, fat::Procedure::Unadjusted, fat::Procedure::OracleFat,
            fat::Procedure::PcaPfa};
}

void emit_panel(const fat::SimConfig& config, const fs::path& dir) {
    ensure_dir(dir);
    auto [panel, truth] = fat::generate_dataset(config, 0);
    fat::write_panel(panel, dir / "responses.csv", dir / "covariates.csv");
    json t;
    t["r"] = config.n_latent;
    t["mu_signal"] = config.mu_signal;
    t["intercepts"] = std::vector<double>(
        truth.intercepts.data(), truth.intercepts.data() + truth.intercepts.size());
    t["nonnull"] = truth.nonnull_set;
    fat::write_text_file(dir / "truth.json", t.dump(2) + "\n");
}

int run_simulate(const SimulateOptions& opt, const std::vector<std::string>& argv) {
    ManifestWriter manifest;
    manifest.command = "simulate";
    manifest.argv = argv;
    manifest.config = sim_config_json(opt);
    if (!opt.config_file.empty()) {
        manifest.inputs[opt.config_file] = file_digest(opt.config_file);
    }

    std::vector<std::pair<std::string, fat::SimulationReport>> arms;
    if (!opt.preset.empty()) {
        if (!fat::is_known_preset(opt.preset)) {
            throw std::invalid_argument("invalid config field 'preset': unknown preset '" +
                                        opt.preset + "'");
        }
        const auto procs = preset_procedures(opt.preset);
        for (const auto& arm : fat::preset_arms(opt.preset, opt.config)) {
            arms.emplace_back(arm.label, arm.alpha_t_search
                                             ? fat::find_alpha_t(arm.config)
                                             : fat::run_replications(arm.config, procs));
        }
    } else {
        arms.emplace_back("custom", fat::run_replications(
                                        opt.config, parse_procedures(opt.procedures)));
    }

    const fs::path out = opt.out_dir;
    ensure_dir(out);
    fat::write_text_file(out / "replications.csv", fat::replications_csv(arms));
    fat::write_text_file(out / "summary.json",
                         fat::summary_json(opt.preset.empty() ? "custom" : opt.preset,
                                           arms));
    manifest.outputs = {"replications.csv", "summary.json"};
    if (!opt.emit_panel_dir.empty()) {
        emit_panel(arms.front().second.config, opt.emit_panel_dir);
    }
    manifest.write(out);
    return 0;
}

// ---- analyze ---------------------------------------------------------

struct AnalyzeOptions {
    std::string responses_path;
    std::string covariates_path;
    std::string config_file;
    std::string out_dir;
    double alpha = 0.05;
    double lambda = 0.1;
    std::string procedure = "fat";
    int r_override = -1;  // -1 = select by the eigenvalue-ratio criterion
    int pi_max = 0;
    bool units_as_rows = false;
    bool standardize = false;
    bool show_config = false;
};

json analyze_config_json(const AnalyzeOptions& o) {
    return json{{"alpha", o.alpha},
                {"lambda", o.lambda},
                {"procedure", o.procedure},
                {"r_override", o.r_override},
                {"pi_max", o.pi_max},
                {"units_as_rows", o.units_as_rows},
                {"standardize_responses", o.standardize}};
}

void apply_analyze_config_json(const json& j, AnalyzeOptions& o) {
    if (j.contains("alpha")) o.alpha = j["alpha"];
    if (j.contains("lambda")) o.lambda = j["lambda"];
    if (j.contains("procedure")) o.procedure = j["procedure"].get<std::string>();
    if (j.contains("r_override")) o.r_override = j["r_override"];
    if (j.contains("pi_max")) o.pi_max = j["pi_max"];
    if (j.contains("units_as_rows")) o.units_as_rows = j["units_as_rows"];
    if (j.contains("standardize_responses")) o.standardize = j["standardize_responses"];
}

int run_analyze(const AnalyzeOptions& opt, const std::vector<std::string>& argv) {
    const fat::Procedure proc = fat::procedure_from_string(opt.procedure);
    if (proc == fat::Procedure::OracleFat) {
        throw std::invalid_argument(
            "invalid config field 'procedure': oracle_fat needs simulation truth");
    }
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) {
        throw std::invalid_argument("invalid config field 'alpha': must lie in (0,1)");
    }

    ManifestWriter manifest;
    manifest.command = "analyze";
    manifest.argv = argv;
    manifest.config = analyze_config_json(opt);
    manifest.inputs[opt.responses_path] = file_digest(opt.responses_path);
    if (!opt.covariates_path.empty()) {
        manifest.inputs[opt.covariates_path] = file_digest(opt.covariates_path);
    }

    fat::PanelData panel = fat::normalize_covariates(
        fat::load_panel(opt.responses_path, opt.covariates_path, opt.units_as_rows));
    if (opt.standardize) panel = fat::standardize_responses(panel);

    const fat::InterceptFit fit = fat::fit_intercepts(panel);
    const int pi_max =
        opt.pi_max > 0 ? opt.pi_max : fat::default_pi_max(panel.n_periods());

    int r_hat = 0;
    fat::LatentFactorFit latent;
    if (proc != fat::Procedure::Unadjusted) {
        r_hat = opt.r_override >= 0
                    ? opt.r_override
                    : fat::select_factor_count(fat::gram_eigen(fit.resid_after_x), pi_max);
        latent = fat::fit_latent(fit.resid_after_x, r_hat);
    }

    fat::TestBattery battery;
    fat::DecisionReport decision;
    if (proc == fat::Procedure::Unadjusted) {
        battery = fat::unadjusted_battery(fit, &panel.unit_ids);
        decision = fat::storey_threshold(battery.p_values, opt.alpha, opt.lambda);
    } else if (proc == fat::Procedure::Fat) {
        battery = fat::fat_battery(fit, latent);
        decision = fat::storey_threshold(battery.p_values, opt.alpha, opt.lambda);
    } else {
        battery = fat::unadjusted_battery(fit, &panel.unit_ids);
        decision = fat::pfa_threshold(fit, latent, opt.alpha);
    }

    auto [plus, minus] = fat::split_by_sign(decision.rejected, fit.mu_hat);
    std::vector<bool> rejected(static_cast<std::size_t>(panel.n_units()), false);
    for (int idx : decision.rejected) rejected[static_cast<std::size_t>(idx)] = true;

    std::string units = "unit_id,mu_hat,statistic,p_value,rejected,sign\n";
    for (Eigen::Index i = 0; i < panel.n_units(); ++i) {
        units += panel.unit_ids[static_cast<std::size_t>(i)];
        units += ',' + fat::format_double(fit.mu_hat(i));
        units += ',' + fat::format_double(battery.statistics(i));
        units += ',' + fat::format_double(battery.p_values(i));
        units += ',' + std::string(rejected[static_cast<std::size_t>(i)] ? "1" : "0");
        units += ',' + std::string(fit.mu_hat(i) > 0.0 ? "+" : "-");
        units += '\n';
    }

    json summary;
    summary["procedure"] = fat::to_string(proc);
    summary["n_units"] = panel.n_units();
    summary["n_periods"] = panel.n_periods();
    summary["r_hat"] = r_hat;
    summary["pi0_hat"] = std::isnan(decision.pi0_hat) ? json() : json(decision.pi0_hat);
    summary["threshold"] = decision.threshold;
    summary["fdr_hat"] = decision.fdr_hat;
    summary["n_rejected"] = decision.r_of_t;
    summary["n_selected_positive"] = plus.size();
    summary["n_selected_negative"] = minus.size();

    const fs::path out = opt.out_dir;
    ensure_dir(out);
    fat::write_text_file(out / "units.csv", units);
    fat::write_text_file(out / "summary.json", summary.dump(2) + "\n");
    manifest.outputs = {"units.csv", "summary.json"};
    manifest.write(out);
    return 0;
}

// ---- backtest --------------------------------------------------------

struct BacktestOptions {
    std::string returns_path;
    std::string market_path;
    std::string config_file;
    std::string out_dir;
    fat::BacktestConfig config;
    std::string procedure = "fat";
    std::string short_leg_sign = "plus";
    bool units_as_rows = false;
    bool show_config = false;
};

json backtest_config_json(const BacktestOptions& o) {
    return json{{"window_length", o.config.window_length},
                {"fdr_level", o.config.fdr_level},
                {"procedure", o.procedure},
                {"lambda", o.config.lambda},
                {"short_leg_sign", o.short_leg_sign},
                {"pi_max", o.config.pi_max},
                {"workers", o.config.workers},
                {"units_as_rows", o.units_as_rows}};
}

void apply_backtest_config_json(const json& j, BacktestOptions& o) {
    if (j.contains("window_length")) o.config.window_length = j["window_length"];
    if (j.contains("fdr_level")) o.config.fdr_level = j["fdr_level"];
    if (j.contains("procedure")) o.procedure = j["procedure"].get<std::string>();
    if (j.contains("lambda")) o.config.lambda = j["lambda"];
    if (j.contains("short_leg_sign"))
        o.short_leg_sign = j["short_leg_sign"].get<std::string>();
    if (j.contains("pi_max")) o.config.pi_max = j["pi_max"];
    if (j.contains("workers")) o.config.workers = j["workers"];
    if (j.contains("units_as_rows")) o.units_as_rows = j["units_as_rows"];
}

int run_backtest(const BacktestOptions& opt, const std::vector<std::string>& argv) {
    fat::BacktestConfig config = opt.config;
    config.procedure = fat::procedure_from_string(opt.procedure);
    if (opt.short_leg_sign == "plus") {
        config.short_leg_sign = fat::ShortLegSign::Plus;
    } else if (opt.short_leg_sign == "minus") {
        config.short_leg_sign = fat::ShortLegSign::Minus;
    } else {
        throw std::invalid_argument(
            "invalid config field 'short_leg_sign': expected plus or minus");
    }

    ManifestWriter manifest;
    manifest.command = "backtest";
    manifest.argv = argv;
    manifest.config = backtest_config_json(opt);
    manifest.inputs[opt.returns_path] = file_digest(opt.returns_path);
    manifest.inputs[opt.market_path] = file_digest(opt.market_path);

    const fat::PanelData panel = fat::normalize_covariates(
        fat::load_panel(opt.returns_path, opt.market_path, opt.units_as_rows));
    if (config.window_length >= panel.n_periods()) {
        throw std::invalid_argument("invalid config field 'window_length': need L < T");
    }

    const fat::BacktestReport primary = fat::rolling_select(panel, config);
    fat::BacktestConfig baseline_config = config;
    baseline_config.procedure = fat::Procedure::Unadjusted;
    const fat::BacktestReport baseline = fat::rolling_select(panel, baseline_config);
    const fat::StrategyComparison comparison = fat::compare_strategies(primary, baseline);

    const fs::path out = opt.out_dir;
    ensure_dir(out);
    fat::write_text_file(out / "windows.csv", fat::backtest_csv(primary, baseline));
    fat::write_text_file(out / "summary.json",
                         fat::backtest_summary_json(primary, baseline, comparison));
    manifest.outputs = {"windows.csv", "summary.json"};
    manifest.write(out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> raw_argv(argv, argv + argc);

    CLI::App app{"Factor-adjusted multiple testing for high-dimensional panels"};
    app.set_version_flag("--version", fat::kVersion);
    app.require_subcommand(1);

    SimulateOptions sim;
    sim.out_dir = default_output_dir().string();
    auto* simulate = app.add_subcommand("simulate", "Run seeded replication experiments");
    simulate->add_option("--preset", sim.preset, "fig1|fig2|fig3|fig4|table1");
    simulate->add_option("--config", sim.config_file, "JSON config (or manifest) file");
    simulate->add_option("--out", sim.out_dir, "Output directory");
    simulate->add_option("--emit-panel", sim.emit_panel_dir,
                         "Also write replication 0's panel CSVs to this directory");
    simulate->add_option("--procedures", sim.procedures,
                         "Comma list of fat,unadjusted,oracle_fat,pca_pfa");
    simulate->add_option("--n-units", sim.config.n_units);
    simulate->add_option("--n-periods", sim.config.n_periods);
    simulate->add_option("--pi0", sim.config.pi0);
    simulate->add_option("--mu", sim.config.mu_signal);
    simulate->add_option("--r", sim.config.n_latent, "True latent factor count");
    simulate->add_option("--p", sim.config.n_covariates, "Observed covariate count");
    simulate->add_option("--rho", sim.config.rho);
    simulate->add_option("--lambda", sim.config.lambda);
    simulate->add_option("--alpha", sim.config.alpha);
    simulate->add_option("--reps", sim.config.n_reps);
    simulate->add_option("--seed", sim.config.seed);
    simulate->add_option("--pi-max", sim.config.pi_max);
    simulate->add_option("--workers", sim.config.workers);
    int sim_r_fit = -1;
    double sim_fixed_t = -1.0;
    simulate->add_option("--r-fit", sim_r_fit,
                         "Fit with this factor count instead of selecting");
    simulate->add_option("--fixed-threshold", sim_fixed_t,
                         "Decide at this threshold instead of the alpha scan");
    simulate->add_flag("--show-config", sim.show_config,
                       "Print the resolved configuration and exit");

    AnalyzeOptions ana;
    ana.out_dir = default_output_dir().string();
    auto* analyze = app.add_subcommand("analyze", "Test intercepts of a panel CSV");
    analyze->add_option("responses", ana.responses_path, "Responses CSV");
    analyze->add_option("covariates", ana.covariates_path, "Covariates CSV");
    analyze->add_option("--config", ana.config_file, "JSON config file");
    analyze->add_option("--out", ana.out_dir, "Output directory");
    analyze->add_option("--alpha", ana.alpha);
    analyze->add_option("--lambda", ana.lambda);
    analyze->add_option("--procedure", ana.procedure, "fat|unadjusted|pfa");
    analyze->add_option("--r", ana.r_override, "Factor count override (>= 0)");
    analyze->add_option("--pi-max", ana.pi_max);
    analyze->add_flag("--units-as-rows", ana.units_as_rows);
    analyze->add_flag("--standardize-responses", ana.standardize);
    analyze->add_flag("--show-config", ana.show_config);

    BacktestOptions bt;
    bt.out_dir = default_output_dir().string();
    auto* backtest = app.add_subcommand("backtest", "Rolling-window fund selection");
    backtest->add_option("returns", bt.returns_path, "Excess-return CSV");
    backtest->add_option("market", bt.market_path, "Observed-factor CSV");
    backtest->add_option("--config", bt.config_file, "JSON config file");
    backtest->add_option("--out", bt.out_dir, "Output directory");
    backtest->add_option("--window-length", bt.config.window_length);
    backtest->add_option("--fdr-level", bt.config.fdr_level);
    backtest->add_option("--procedure", bt.procedure, "fat|unadjusted");
    backtest->add_option("--lambda", bt.config.lambda);
    backtest->add_option("--short-leg-sign", bt.short_leg_sign, "plus|minus");
    backtest->add_option("--pi-max", bt.config.pi_max);
    backtest->add_option("--workers", bt.config.workers);
    backtest->add_flag("--units-as-rows", bt.units_as_rows);
    backtest->add_flag("--show-config", bt.show_config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalidConfig;
    }

    try {
        if (simulate->parsed()) {
            if (!sim.config_file.empty()) {
                SimulateOptions merged;
                merged.out_dir = sim.out_dir;
                merged.emit_panel_dir = sim.emit_panel_dir;
                merged.show_config = sim.show_config;
                merged.config_file = sim.config_file;
                apply_sim_config_json(load_config_file(sim.config_file), merged);
                if (simulate->count("--preset")) merged.preset = sim.preset;
                if (simulate->count("--procedures")) merged.procedures = sim.procedures;
                if (simulate->count("--n-units")) merged.config.n_units = sim.config.n_units;
                if (simulate->count("--n-periods"))
                    merged.config.n_periods = sim.config.n_periods;
                if (simulate->count("--pi0")) merged.config.pi0 = sim.config.pi0;
                if (simulate->count("--mu")) merged.config.mu_signal = sim.config.mu_signal;
                if (simulate->count("--r")) merged.config.n_latent = sim.config.n_latent;
                if (simulate->count("--p"))
                    merged.config.n_covariates = sim.config.n_covariates;
                if (simulate->count("--rho")) merged.config.rho = sim.config.rho;
                if (simulate->count("--lambda")) merged.config.lambda = sim.config.lambda;
                if (simulate->count("--alpha")) merged.config.alpha = sim.config.alpha;
                if (simulate->count("--reps")) merged.config.n_reps = sim.config.n_reps;
                if (simulate->count("--seed")) merged.config.seed = sim.config.seed;
                if (simulate->count("--pi-max")) merged.config.pi_max = sim.config.pi_max;
                if (simulate->count("--workers"))
                    merged.config.workers = sim.config.workers;
                sim = merged;
            }
            if (simulate->count("--r-fit")) sim.config.r_override = sim_r_fit;
            if (simulate->count("--fixed-threshold"))
                sim.config.fixed_threshold = sim_fixed_t;
            if (sim.show_config) {
                std::cout << sim_config_json(sim).dump(2) << "\n";
                return 0;
            }
            sim.config.validate();
            return run_simulate(sim, raw_argv);
        }
        if (analyze->parsed()) {
            if (!ana.config_file.empty()) {
                AnalyzeOptions merged = ana;
                apply_analyze_config_json(load_config_file(ana.config_file), merged);
                if (analyze->count("--alpha")) merged.alpha = ana.alpha;
                if (analyze->count("--lambda")) merged.lambda = ana.lambda;
                if (analyze->count("--procedure")) merged.procedure = ana.procedure;
                if (analyze->count("--r")) merged.r_override = ana.r_override;
                if (analyze->count("--pi-max")) merged.pi_max = ana.pi_max;
                if (analyze->count("--units-as-rows"))
                    merged.units_as_rows = ana.units_as_rows;
                if (analyze->count("--standardize-responses"))
                    merged.standardize = ana.standardize;
                ana = merged;
            }
            if (ana.show_config) {
                std::cout << analyze_config_json(ana).dump(2) << "\n";
                return 0;
            }
            if (ana.responses_path.empty()) {
                throw std::invalid_argument("missing required argument: responses CSV");
            }
            return run_analyze(ana, raw_argv);
        }
        if (backtest->parsed()) {
            if (!bt.config_file.empty()) {
                BacktestOptions merged = bt;
                apply_backtest_config_json(load_config_file(bt.config_file), merged);
                if (backtest->count("--window-length"))
                    merged.config.window_length = bt.config.window_length;
                if (backtest->count("--fdr-level"))
                    merged.config.fdr_level = bt.config.fdr_level;
                if (backtest->count("--procedure")) merged.procedure = bt.procedure;
                if (backtest->count("--lambda")) merged.config.lambda = bt.config.lambda;
                if (backtest->count("--short-leg-sign"))
                    merged.short_leg_sign = bt.short_leg_sign;
                if (backtest->count("--pi-max")) merged.config.pi_max = bt.config.pi_max;
                if (backtest->count("--workers"))
                    merged.config.workers = bt.config.workers;
                if (backtest->count("--units-as-rows"))
                    merged.units_as_rows = bt.units_as_rows;
                bt = merged;
            }
            if (bt.show_config) {
                std::cout << backtest_config_json(bt).dump(2) << "\n";
                return 0;
            }
            if (bt.returns_path.empty() || bt.market_path.empty()) {
                throw std::invalid_argument(
                    "missing required arguments: returns and market CSVs");
            }
            return run_backtest(bt, raw_argv);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const json::exception& e) {
        std::cerr << "error: bad config file: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeFailure;
    }
    return 0;
}
