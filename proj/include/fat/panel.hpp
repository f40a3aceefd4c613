#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace fat {

// Observed panel: N units measured over T periods plus T observations of p
// covariates. Responses are stored N x T (one row per unit), covariates
// T x p (one row per period).
struct PanelData {
    Eigen::MatrixXd responses;   // N x T
    Eigen::MatrixXd covariates;  // T x p (p may be 0)
    std::vector<std::string> unit_ids;       // length N
    std::vector<std::string> period_ids;     // length T
    std::vector<std::string> covariate_ids;  // length p

    Eigen::Index n_units() const { return responses.rows(); }
    Eigen::Index n_periods() const { return responses.cols(); }
    Eigen::Index n_covariates() const { return covariates.cols(); }

    // Sub-panel over periods [first, first+count); selections and ids follow.
    PanelData period_window(Eigen::Index first, Eigen::Index count) const;
};

// Simulation truth attached to a generated panel.
struct GroundTruth {
    Eigen::VectorXd intercepts;       // length N
    std::vector<int> nonnull_set;     // indices with intercept != 0
    std::vector<int> null_set;        // complement
    Eigen::MatrixXd latent_scores;    // T x r
    Eigen::MatrixXd latent_loadings;  // N x r
    Eigen::VectorXd idio_variances;   // length N

    int n_nonnull() const { return static_cast<int>(nonnull_set.size()); }
};

// On-disk layout (see README): CSV, UTF-8, comma-delimited, '.' decimal
// point, header row, reals written with 17 significant digits.
//   responses:  header = unit ids, one row per period (T x N cells)
//   covariates: header = factor names, one row per period (T x p cells)
// With units_as_rows, the responses file instead has a leading "unit" id
// column, a header of period ids, and one row per unit.
PanelData load_panel(const std::filesystem::path& responses_path,
                     const std::filesystem::path& covariates_path,
                     bool units_as_rows = false);

// Writes the canonical periods-as-rows layout.
void write_panel(const PanelData& panel,
                 const std::filesystem::path& responses_path,
                 const std::filesystem::path& covariates_path);

// Demeans every covariate column; responses are left untouched.
PanelData normalize_covariates(PanelData panel);

// Opt-in rescaling of each unit's responses to unit variance (divisor T).
// Not applied by default anywhere: it changes the scale of the intercepts.
PanelData standardize_responses(PanelData panel);

// Validates dimensions and finiteness; throws std::invalid_argument.
void validate_panel(const PanelData& panel);

}  // namespace fat
