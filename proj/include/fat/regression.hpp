#pragma once

#include "fat/battery.hpp"
#include "fat/panel.hpp"

#include <Eigen/Dense>

namespace fat {

// Projection that removes the column space of `source` from T-vectors:
// v -> v - S (S'S)^{-1} S'v. Applied operator-style; the T x T matrix is
// never materialized.
class Annihilator {
public:
    // Throws if S'S is numerically rank deficient (relative eigenvalue
    // cutoff 1e-12).
    explicit Annihilator(Eigen::MatrixXd source);

    // Q * M for a T x m block.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

    const Eigen::MatrixXd& source() const { return source_; }
    const Eigen::MatrixXd& gram_inverse() const { return gram_inverse_; }
    Eigen::Index dim() const { return source_.rows(); }

private:
    Eigen::MatrixXd source_;        // T x k
    Eigen::MatrixXd gram_inverse_;  // k x k, (S'S)^{-1}
};

// Output of the projection-based intercept regression.
struct InterceptFit {
    Eigen::VectorXd mu_hat;       // length N, OLS intercepts
    double one_q_one = 0.0;       // 1'Q1 with Q removing the covariates
    Eigen::VectorXd q_one;        // Q1, kept for the factor adjustments
    Eigen::MatrixXd resid_after_x;  // T x N, covariates removed
    Eigen::MatrixXd resid_full;     // T x N, covariates and constant removed
    Eigen::VectorXd sigma_e_diag;   // length N, T^{-1} ||resid_full col||^2

    Eigen::Index n_units() const { return mu_hat.size(); }
};

// OLS intercepts via the projection identity mu' = (1'Q1)^{-1} 1'Q Y'.
// The covariates are used exactly as given; pass a normalized panel unless
// a sub-window of one is being fitted.
InterceptFit fit_intercepts(const PanelData& panel);

// Unadjusted statistics mu_i * (1'Q1)^{1/2} / sigma_e_ii^{1/2} and their
// two-sided normal p-values.
TestBattery unadjusted_battery(const InterceptFit& fit,
                               const std::vector<std::string>* unit_ids = nullptr);

}  // namespace fat
