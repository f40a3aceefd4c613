#pragma once

#include "fat/panel.hpp"
#include "fat/testing.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fat {

// One simulation scenario: an observed-factor design with a latent factor
// structure on the errors and AR-decaying idiosyncratic covariance.
struct SimConfig {
    int n_units = 1000;       // N
    int n_periods = 100;      // T
    double pi0 = 0.95;        // proportion of zero intercepts
    double mu_signal = 0.8;   // common nonzero intercept value
    int n_latent = 1;         // r, true latent factor count
    int n_covariates = 3;     // p, observed factors
    double rho = 0.5;         // AR decay of the idiosyncratic covariance
    double lambda = 0.1;      // Storey tuning parameter
    double alpha = 0.01;      // nominal FDR level
    int n_reps = 100;         // replication count
    std::uint64_t seed = 1;   // root seed

    std::optional<int> r_override;            // fit with a fixed factor count
    std::optional<double> fixed_threshold;    // decide at fixed t instead of alpha
    int pi_max = 0;                           // 0 = min(15, T/2)
    int workers = 0;                          // 0 = hardware concurrency

    int n_nonnull() const;  // N1 = round(N * (1 - pi0))
    void validate() const;  // throws std::invalid_argument naming the field
};

// One replication of one procedure.
struct ReplicationRecord {
    int rep = 0;
    Procedure procedure = Procedure::Fat;
    int r_true = 0;
    int r_hat = 0;
    double threshold = 0.0;
    double pi0_hat = 0.0;
    double fdr_hat = 0.0;
    int n_rejected = 0;
    int v = 0;
    int s = 0;
    double fdp = 0.0;
    std::optional<double> power;
    std::optional<double> alpha_t;  // only for the vanishing-threshold search
};

struct SimulationReport {
    SimConfig config;
    std::vector<Procedure> procedures;
    std::vector<ReplicationRecord> records;  // rep-major, then procedure

    std::vector<const ReplicationRecord*> by_procedure(Procedure p) const;
    double mean_of(Procedure p, double ReplicationRecord::*field) const;
    double se_of(Procedure p, double ReplicationRecord::*field) const;
    double mean_power(Procedure p) const;
    double se_power(Procedure p) const;
    double mean_alpha_t(Procedure p) const;
    // Fraction of replications with r_hat equal to the true factor count.
    double r_match_rate(Procedure p) const;
};

// Draws one synthetic panel plus its truth, deterministically from
// (config.seed, rep_index). Draw order: X, beta, Z, loadings, idiosyncratic
// noise (period by period), then the intercept assignment (first N1 units).
// Covariate columns are centered in-sample before responses are built, so
// the panel already satisfies the zero-mean covariate convention.
std::pair<PanelData, GroundTruth> generate_dataset(const SimConfig& config, int rep_index);

// Runs the full pipeline for every replication and procedure: fit, select
// the factor count (or apply the override), build batteries, threshold at
// config.alpha (or config.fixed_threshold), attach truth metrics.
SimulationReport run_replications(const SimConfig& config,
                                  const std::vector<Procedure>& procedures);

// Per-replication search for the smallest nominal level whose data-driven
// threshold captures every nonnull unit:
//   alpha_T = min over order statistics p_(k) >= max nonnull p-value of the
//   FDR estimate at p_(k)
// (the achievable-value grid; the estimate is piecewise linear so the
// infimum over a continuum is attained there). Power is 1 by construction.
SimulationReport find_alpha_t(const SimConfig& config);

// Named experiment presets; each arm is a labelled SimConfig.
struct PresetArm {
    std::string label;
    SimConfig config;
    bool alpha_t_search = false;
};
std::vector<PresetArm> preset_arms(const std::string& preset, const SimConfig& base);
bool is_known_preset(const std::string& preset);

// Stable on-disk schemas (documented in the README).
std::string replications_csv(const std::vector<std::pair<std::string, SimulationReport>>& arms);
std::string summary_json(const std::string& preset,
                         const std::vector<std::pair<std::string, SimulationReport>>& arms);

}  // namespace fat
