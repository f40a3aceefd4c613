#pragma once

#include <Eigen/Dense>

namespace fat {

// Full eigendecomposition of the T x T residual Gram matrix (TN)^{-1} E'E.
struct GramSpectrum {
    Eigen::VectorXd eigenvalues;   // length T, descending, clamped at 0
    Eigen::MatrixXd eigenvectors;  // T x T, orthonormal columns
};

// Principal-component factor estimates taken from post-covariate residuals.
struct LatentFactorFit {
    int r_hat = 0;
    Eigen::MatrixXd scores;          // T x r, sqrt(T) * leading eigenvectors
    Eigen::MatrixXd loadings;        // N x r
    Eigen::MatrixXd idio_resid;      // T x N, residuals after removing scores
    Eigen::VectorXd sigma_eta_diag;  // length N, T^{-1} ||idio col||^2
};

// Eigendecomposition of (TN)^{-1} E'E for a T x N residual block, sorted
// descending. Each eigenvector is flipped so its largest-magnitude entry is
// positive, making reruns deterministic.
GramSpectrum gram_eigen(const Eigen::MatrixXd& resid_after_x);

// Eigenvalue-ratio criterion: argmax_{j <= pi_max} lambda_j / lambda_{j+1},
// ties broken toward the smallest j. Ratios with a zero denominator are
// skipped; throws if every ratio is undefined.
int select_factor_count(const GramSpectrum& spectrum, int pi_max);

// Default search bound for the ratio criterion.
int default_pi_max(Eigen::Index n_periods);

// Scores, loadings, and idiosyncratic variances for a given factor count.
// r = 0 is the pass-through: no projection, empty loadings.
LatentFactorFit fit_latent(const Eigen::MatrixXd& resid_after_x, int r);

}  // namespace fat
