#include "fat/sim.hpp"

#include "fat/csv.hpp"
#include "fat/parallel.hpp"
#include "fat/rng.hpp"
#include "fat/stats.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fat {

int SimConfig::n_nonnull() const {
    return static_cast<int>(std::lround(static_cast<double>(n_units) * (1.0 - pi0)));
}

void SimConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("invalid config field '" + field + "': " + why);
    };
    if (n_units < 1) fail("n_units", "must be >= 1");
    if (n_periods < n_covariates + 2) fail("n_periods", "need T >= p + 2");
    if (!(pi0 >= 0.0 && pi0 <= 1.0)) fail("pi0", "must lie in [0,1]");
    if (n_latent < 0) fail("n_latent", "must be >= 0");
    if (n_covariates < 0) fail("n_covariates", "must be >= 0");
    if (!(std::fabs(rho) < 1.0)) fail("rho", "must satisfy |rho| < 1");
    if (!(lambda >= 0.0 && lambda < 1.0)) fail("lambda", "must lie in [0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha", "must lie in (0,1)");
    if (n_reps < 1) fail("n_reps", "must be >= 1");
    if (fixed_threshold && !(*fixed_threshold >= 0.0 && *fixed_threshold <= 1.0)) {
        fail("fixed_threshold", "must lie in [0,1]");
    }
    if (r_override && (*r_override < 0 || *r_override > std::min(n_units, n_periods) - 1)) {
        fail("r_override", "must lie in [0, min(N,T)-1]");
    }
    if (pi_max < 0 || pi_max > n_periods - 1) fail("pi_max", "must lie in [0, T-1]");
    if (workers < 0) fail("workers", "must be >= 0");
}

std::pair<PanelData, GroundTruth> generate_dataset(const SimConfig& config, int rep_index) {
    config.validate();
    const int n = config.n_units;
    const int t = config.n_periods;
    const int p = config.n_covariates;
    const int r = config.n_latent;

    std::mt19937_64 rng = make_stream(config.seed, static_cast<std::uint64_t>(rep_index));
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Fixed draw order; every matrix is filled row by row.
    Eigen::MatrixXd x(t, p);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = gauss(rng);
    Eigen::MatrixXd beta(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) beta(i, j) = gauss(rng);
    Eigen::MatrixXd z(t, r);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < r; ++j) z(i, j) = gauss(rng);
    Eigen::MatrixXd loadings(n, r);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) loadings(i, j) = gauss(rng);

    // Idiosyncratic noise: each period's cross section has covariance
    // sigma_ij = rho^{|i-j|}. The AR(1) recursion over units applies the
    // exact lower-triangular square root of that matrix.
    Eigen::MatrixXd eta(n, t);
    const double decay = config.rho;
    const double fresh = std::sqrt(1.0 - decay * decay);
    for (int s = 0; s < t; ++s) {
        double prev = 0.0;
        for (int i = 0; i < n; ++i) {
            const double shock = gauss(rng);
            prev = (i == 0) ? shock : decay * prev + fresh * shock;
            eta(i, s) = prev;
        }
    }

    // Zero-mean covariate convention, realized in-sample before responses
    // are built so the projection theory is exact for the generated panel.
    for (int j = 0; j < p; ++j) x.col(j).array() -= x.col(j).mean();

    GroundTruth truth;
    truth.intercepts = Eigen::VectorXd::Zero(n);
    const int n1 = config.n_nonnull();
    for (int i = 0; i < n; ++i) {
        if (i < n1) {
            truth.intercepts(i) = config.mu_signal;
            truth.nonnull_set.push_back(i);
        } else {
            truth.null_set.push_back(i);
        }
    }
    if (config.mu_signal == 0.0) {
        // All intercepts are zero regardless of pi0.
        truth.null_set.insert(truth.null_set.begin(), truth.nonnull_set.begin(),
                              truth.nonnull_set.end());
        std::sort(truth.null_set.begin(), truth.null_set.end());
        truth.nonnull_set.clear();
        truth.intercepts.setZero();
    }
    truth.latent_scores = z;
    truth.latent_loadings = loadings;
    truth.idio_variances = Eigen::VectorXd::Ones(n);

    PanelData panel;
    panel.responses = truth.intercepts.replicate(1, t) + beta * x.transpose() +
                      loadings * z.transpose() + eta;
    panel.covariates = x;
    panel.unit_ids.reserve(n);
    for (int i = 0; i < n; ++i) panel.unit_ids.push_back("u" + std::to_string(i + 1));
    panel.period_ids.reserve(t);
    for (int s = 0; s < t; ++s) panel.period_ids.push_back(std::to_string(s + 1));
    for (int j = 0; j < p; ++j) panel.covariate_ids.push_back("f" + std::to_string(j + 1));
    return {std::move(panel), std::move(truth)};
}

namespace {

int effective_pi_max(const SimConfig& config) {
    return config.pi_max > 0 ? config.pi_max : default_pi_max(config.n_periods);
}

ReplicationRecord make_record(int rep, Procedure proc, const SimConfig& config,
                              int r_hat, const DecisionReport& decision) {
    ReplicationRecord rec;
    rec.rep = rep;
    rec.procedure = proc;
    rec.r_true = config.n_latent;
    rec.r_hat = r_hat;
    rec.threshold = decision.threshold;
    rec.pi0_hat = decision.pi0_hat;
    rec.fdr_hat = decision.fdr_hat;
    rec.n_rejected = decision.r_of_t;
    if (decision.truth_metrics) {
        rec.v = decision.truth_metrics->v;
        rec.s = decision.truth_metrics->s;
        rec.fdp = decision.truth_metrics->fdp;
        rec.power = decision.truth_metrics->power;
    }
    return rec;
}

}  // namespace

SimulationReport run_replications(const SimConfig& config,
                                  const std::vector<Procedure>& procedures) {
    config.validate();
    if (procedures.empty()) {
        throw std::invalid_argument("run_replications: no procedures requested");
    }

    SimulationReport report;
    report.config = config;
    report.procedures = procedures;
    report.records.resize(static_cast<std::size_t>(config.n_reps) * procedures.size());

    const bool needs_latent =
        std::any_of(procedures.begin(), procedures.end(), [](Procedure p) {
            return p == Procedure::Fat || p == Procedure::PcaPfa;
        });

    parallel_for(config.n_reps, config.workers, [&](int rep) {
        try {
            auto [panel, truth] = generate_dataset(config, rep);
            const InterceptFit fit = fit_intercepts(panel);

            int r_hat = 0;
            LatentFactorFit latent;
            if (needs_latent) {
                if (config.r_override) {
                    r_hat = *config.r_override;
                } else {
                    const GramSpectrum spectrum = gram_eigen(fit.resid_after_x);
                    r_hat = select_factor_count(spectrum, effective_pi_max(config));
                }
                latent = fit_latent(fit.resid_after_x, r_hat);
            }

            for (std::size_t k = 0; k < procedures.size(); ++k) {
                const Procedure proc = procedures[k];
                DecisionReport decision;
                int rec_r = 0;
                switch (proc) {
                    case Procedure::Unadjusted: {
                        const TestBattery b = unadjusted_battery(fit);
                        decision = config.fixed_threshold
                                       ? decide_at_threshold(b.p_values,
                                                             *config.fixed_threshold,
                                                             config.lambda)
                                       : storey_threshold(b.p_values, config.alpha,
                                                          config.lambda);
                        decision = confusion(std::move(decision), b.p_values, truth);
                        break;
                    }
                    case Procedure::Fat: {
                        const TestBattery b = fat_battery(fit, latent);
                        decision = config.fixed_threshold
                                       ? decide_at_threshold(b.p_values,
                                                             *config.fixed_threshold,
                                                             config.lambda)
                                       : storey_threshold(b.p_values, config.alpha,
                                                          config.lambda);
                        decision = confusion(std::move(decision), b.p_values, truth);
                        rec_r = r_hat;
                        break;
                    }
                    case Procedure::OracleFat: {
                        const TestBattery b = oracle_battery(fit, truth);
                        decision = config.fixed_threshold
                                       ? decide_at_threshold(b.p_values,
                                                             *config.fixed_threshold,
                                                             config.lambda)
                                       : storey_threshold(b.p_values, config.alpha,
                                                          config.lambda);
                        decision = confusion(std::move(decision), b.p_values, truth);
                        rec_r = config.n_latent;
                        break;
                    }
                    case Procedure::PcaPfa: {
                        const TestBattery b = unadjusted_battery(fit);
                        if (config.fixed_threshold) {
                            decision = decide_at_threshold(
                                b.p_values, *config.fixed_threshold, config.lambda);
                            const auto est = pfa_fdp_estimate(fit, latent,
                                                              *config.fixed_threshold);
                            decision.fdr_hat = est ? *est : 0.0;
                            decision.pi0_hat = std::numeric_limits<double>::quiet_NaN();
                        } else {
                            decision = pfa_threshold(fit, latent, config.alpha);
                        }
                        decision = confusion(std::move(decision), b.p_values, truth);
                        rec_r = r_hat;
                        break;
                    }
                }
                report.records[static_cast<std::size_t>(rep) * procedures.size() + k] =
                    make_record(rep, proc, config, rec_r, decision);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(rep) +
                                     " failed: " + e.what());
        }
    });
    return report;
}

SimulationReport find_alpha_t(const SimConfig& config) {
    config.validate();
    if (config.n_nonnull() < 1 || config.mu_signal == 0.0) {
        throw std::invalid_argument(
            "invalid config field 'pi0': the vanishing-threshold search needs N1 >= 1");
    }

    SimulationReport report;
    report.config = config;
    report.procedures = {Procedure::Fat};
    report.records.resize(static_cast<std::size_t>(config.n_reps));

    parallel_for(config.n_reps, config.workers, [&](int rep) {
        try {
            auto [panel, truth] = generate_dataset(config, rep);
            const InterceptFit fit = fit_intercepts(panel);
            int r_hat;
            if (config.r_override) {
                r_hat = *config.r_override;
            } else {
                r_hat = select_factor_count(gram_eigen(fit.resid_after_x),
                                            effective_pi_max(config));
            }
            const LatentFactorFit latent = fit_latent(fit.resid_after_x, r_hat);
            const TestBattery battery = fat_battery(fit, latent);

            double worst_signal_p = 0.0;
            for (int idx : truth.nonnull_set) {
                worst_signal_p = std::max(worst_signal_p, battery.p_values(idx));
            }
            const double n = static_cast<double>(battery.p_values.size());
            const double pi0 = estimate_pi0(battery.p_values, config.lambda);

            std::vector<double> sorted(battery.p_values.data(),
                                       battery.p_values.data() + battery.p_values.size());
            std::sort(sorted.begin(), sorted.end());
            double alpha_t = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < sorted.size(); ++k) {
                if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
                if (sorted[k] < worst_signal_p) continue;
                const double est = n * pi0 * sorted[k] / static_cast<double>(k + 1);
                alpha_t = std::min(alpha_t, est);
            }
            // The worst signal p-value is itself an order statistic, so the
            // search set is never empty and power at the threshold is 1.
            double threshold = 0.0;
            for (std::size_t k = 0; k < sorted.size(); ++k) {
                if (k + 1 < sorted.size() && sorted[k + 1] == sorted[k]) continue;
                const double est = n * pi0 * sorted[k] / static_cast<double>(k + 1);
                if (est <= alpha_t) threshold = sorted[k];
            }

            DecisionReport decision;
            decision.threshold = threshold;
            decision.lambda = config.lambda;
            decision.pi0_hat = pi0;
            decision.fdr_hat = fdr_estimate(battery.p_values, config.lambda, threshold);
            for (Eigen::Index i = 0; i < battery.p_values.size(); ++i) {
                if (battery.p_values(i) <= threshold) {
                    decision.rejected.push_back(static_cast<int>(i));
                }
            }
            decision.r_of_t = static_cast<int>(decision.rejected.size());
            decision = confusion(std::move(decision), battery.p_values, truth);

            ReplicationRecord rec = make_record(rep, Procedure::Fat, config, r_hat, decision);
            rec.alpha_t = alpha_t;
            report.records[static_cast<std::size_t>(rep)] = rec;
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(rep) +
                                     " failed: " + e.what());
        }
    });
    return report;
}

std::vector<const ReplicationRecord*> SimulationReport::by_procedure(Procedure p) const {
    std::vector<const ReplicationRecord*> out;
    for (const auto& rec : records) {
        if (rec.procedure == p) out.push_back(&rec);
    }
    return out;
}

double SimulationReport::mean_of(Procedure p, double ReplicationRecord::*field) const {
    std::vector<double> values;
    for (const auto* rec : by_procedure(p)) values.push_back(rec->*field);
    return mean(values);
}

double SimulationReport::se_of(Procedure p, double ReplicationRecord::*field) const {
    std::vector<double> values;
    for (const auto* rec : by_procedure(p)) values.push_back(rec->*field);
    return standard_error(values);
}

double SimulationReport::mean_power(Procedure p) const {
    std::vector<double> values;
    for (const auto* rec : by_procedure(p)) {
        if (rec->power) values.push_back(*rec->power);
    }
    return mean(values);
}

double SimulationReport::se_power(Procedure p) const {
    std::vector<double> values;
    for (const auto* rec : by_procedure(p)) {
        if (rec->power) values.push_back(*rec->power);
    }
    return standard_error(values);
}

double SimulationReport::mean_alpha_t(Procedure p) const {
    std::vector<double> values;
    for (const auto* rec : by_procedure(p)) {
        if (rec->alpha_t) values.push_back(*rec->alpha_t);
    }
    return mean(values);
}

double SimulationReport::r_match_rate(Procedure p) const {
    const auto recs = by_procedure(p);
    if (recs.empty()) return 0.0;
    int hits = 0;
    for (const auto* rec : recs) {
        if (rec->r_hat == rec->r_true) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(recs.size());
}

bool is_known_preset(const std::string& preset) {
    return preset == "fig1" || preset == "fig2" || preset == "fig3" ||
           preset == "fig4" || preset == "table1";
}

std::vector<PresetArm> preset_arms(const std::string& preset, const SimConfig& base) {
    std::vector<PresetArm> arms;
    if (preset == "fig1") {
        // Fixed threshold, true r = 1, fitted factor count swept 0..5.
        for (int r = 0; r <= 5; ++r) {
            SimConfig c = base;
            c.n_latent = 1;
            c.r_override = r;
            if (!c.fixed_threshold) c.fixed_threshold = 0.01;
            arms.push_back({"r_fit=" + std::to_string(r), c, false});
        }
    } else if (preset == "fig2") {
        // Factor-count recovery across true r = 1..10.
        for (int r = 1; r <= 10; ++r) {
            SimConfig c = base;
            c.n_latent = r;
            arms.push_back({"r_true=" + std::to_string(r), c, false});
        }
    } else if (preset == "fig3") {
        // Estimated vs realized FDP at a fixed threshold across signal sizes.
        for (double mu : {0.4, 0.8, 1.2}) {
            SimConfig c = base;
            c.mu_signal = mu;
            if (!c.fixed_threshold) c.fixed_threshold = 0.01;
            arms.push_back({"mu=" + format_double(mu), c, false});
        }
    } else if (preset == "fig4") {
        // Data-driven thresholding at the nominal level across signal sizes.
        for (double mu : {0.4, 0.8, 1.2}) {
            SimConfig c = base;
            c.mu_signal = mu;
            c.fixed_threshold.reset();
            arms.push_back({"mu=" + format_double(mu), c, false});
        }
    } else if (preset == "table1") {
        // Vanishing-threshold search under extreme sparsity.
        for (int t : {32, 36, 40, 44, 48, 52, 56, 60}) {
            SimConfig c = base;
            c.n_periods = t;
            c.pi0 = 0.995;
            c.mu_signal = 1.0;
            c.fixed_threshold.reset();
            arms.push_back({"T=" + std::to_string(t), c, true});
        }
    } else {
        throw std::invalid_argument("unknown preset '" + preset + "'");
    }
    return arms;
}

namespace {

std::string optional_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

nlohmann::json config_json(const SimConfig& c) {
    nlohmann::json j{{"n_units", c.n_units},
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
    j["r_override"] = c.r_override ? nlohmann::json(*c.r_override) : nlohmann::json();
    j["fixed_threshold"] =
        c.fixed_threshold ? nlohmann::json(*c.fixed_threshold) : nlohmann::json();
    return j;
}

}  // namespace

std::string replications_csv(
    const std::vector<std::pair<std::string, SimulationReport>>& arms) {
    std::string out =
        "arm,rep,procedure,r_true,r_hat,threshold,pi0_hat,fdr_hat,n_rejected,"
        "v,s,fdp,power,alpha_t\n";
    for (const auto& [label, report] : arms) {
        for (const auto& rec : report.records) {
            out += label;
            out += ',' + std::to_string(rec.rep);
            out += ',' + to_string(rec.procedure);
            out += ',' + std::to_string(rec.r_true);
            out += ',' + std::to_string(rec.r_hat);
            out += ',' + format_double(rec.threshold);
            out += ',' + format_double(rec.pi0_hat);
            out += ',' + format_double(rec.fdr_hat);
            out += ',' + std::to_string(rec.n_rejected);
            out += ',' + std::to_string(rec.v);
            out += ',' + std::to_string(rec.s);
            out += ',' + format_double(rec.fdp);
            out += ',' + optional_cell(rec.power);
            out += ',' + optional_cell(rec.alpha_t);
            out += '\n';
        }
    }
    return out;
}

std::string summary_json(const std::string& preset,
                         const std::vector<std::pair<std::string, SimulationReport>>& arms) {
    nlohmann::json root;
    root["preset"] = preset;
    root["arms"] = nlohmann::json::array();
    for (const auto& [label, report] : arms) {
        nlohmann::json arm;
        arm["label"] = label;
        arm["config"] = config_json(report.config);
        arm["procedures"] = nlohmann::json::object();
        for (Procedure p : report.procedures) {
            const auto recs = report.by_procedure(p);
            if (recs.empty()) continue;
            nlohmann::json agg;
            agg["n_reps"] = recs.size();
            agg["mean_fdp"] = report.mean_of(p, &ReplicationRecord::fdp);
            agg["se_fdp"] = recs.size() > 1 ? report.se_of(p, &ReplicationRecord::fdp) : 0.0;
            agg["mean_fdr_hat"] = report.mean_of(p, &ReplicationRecord::fdr_hat);
            agg["mean_threshold"] = report.mean_of(p, &ReplicationRecord::threshold);
            agg["r_match_rate"] = report.r_match_rate(p);
            bool any_power = false;
            for (const auto* rec : recs) any_power = any_power || rec->power.has_value();
            if (any_power) {
                agg["mean_power"] = report.mean_power(p);
                agg["se_power"] = recs.size() > 1 ? report.se_power(p) : 0.0;
            }
            bool any_alpha = false;
            for (const auto* rec : recs) any_alpha = any_alpha || rec->alpha_t.has_value();
            if (any_alpha) agg["mean_alpha_t"] = report.mean_alpha_t(p);
            arm["procedures"][to_string(p)] = agg;
        }
        root["arms"].push_back(arm);
    }
    return root.dump(2) + "\n";
}

}  // namespace fat
