#include "fat/latent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fat {

GramSpectrum gram_eigen(const Eigen::MatrixXd& resid_after_x) {
    if (resid_after_x.rows() < 2) {
        throw std::invalid_argument("gram_eigen: need at least two periods");
    }
    if (!resid_after_x.allFinite()) {
        throw std::invalid_argument("gram_eigen: non-finite residuals");
    }
    const double tn =
        static_cast<double>(resid_after_x.rows()) * static_cast<double>(resid_after_x.cols());
    const Eigen::MatrixXd gram = resid_after_x * resid_after_x.transpose() / tn;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("gram_eigen: eigendecomposition failed");
    }

    const Eigen::Index t = gram.rows();
    GramSpectrum spectrum;
    spectrum.eigenvalues.resize(t);
    spectrum.eigenvectors.resize(t, t);
    for (Eigen::Index j = 0; j < t; ++j) {
        // Eigen returns ascending order; flip to descending.
        spectrum.eigenvalues(j) = std::max(eig.eigenvalues()(t - 1 - j), 0.0);
        spectrum.eigenvectors.col(j) = eig.eigenvectors().col(t - 1 - j);
        // Sign convention: largest-magnitude entry positive.
        Eigen::Index arg = 0;
        spectrum.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (spectrum.eigenvectors(arg, j) < 0.0) spectrum.eigenvectors.col(j) *= -1.0;
    }
    return spectrum;
}

int select_factor_count(const GramSpectrum& spectrum, int pi_max) {
    const Eigen::Index t = spectrum.eigenvalues.size();
    if (pi_max < 1 || pi_max > t - 1) {
        throw std::invalid_argument("select_factor_count: pi_max must lie in [1, T-1]");
    }
    int best = 0;
    double best_ratio = -1.0;
    for (int j = 1; j <= pi_max; ++j) {
        const double denom = spectrum.eigenvalues(j);
        if (!(denom > 0.0)) continue;
        const double ratio = spectrum.eigenvalues(j - 1) / denom;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = j;
        }
    }
    if (best == 0) {
        throw std::invalid_argument(
            "select_factor_count: degenerate spectrum, every eigenvalue ratio is undefined");
    }
    return best;
}

int default_pi_max(Eigen::Index n_periods) {
    return static_cast<int>(std::min<Eigen::Index>(15, n_periods / 2));
}

LatentFactorFit fit_latent(const Eigen::MatrixXd& resid_after_x, int r) {
    const Eigen::Index t = resid_after_x.rows();
    const Eigen::Index n = resid_after_x.cols();
    if (r < 0 || r > std::min(t, n) - 1) {
        throw std::invalid_argument("fit_latent: r out of range [0, min(T,N)-1]");
    }

    LatentFactorFit fit;
    fit.r_hat = r;
    if (r == 0) {
        fit.scores.resize(t, 0);
        fit.loadings.resize(n, 0);
        fit.idio_resid = resid_after_x;
        fit.sigma_eta_diag =
            fit.idio_resid.colwise().squaredNorm().transpose() / static_cast<double>(t);
        return fit;
    }

    const GramSpectrum spectrum = gram_eigen(resid_after_x);
    fit.scores = std::sqrt(static_cast<double>(t)) * spectrum.eigenvectors.leftCols(r);
    const Eigen::MatrixXd score_gram = fit.scores.transpose() * fit.scores;  // ~ T * I_r
    fit.loadings =
        score_gram.ldlt().solve(fit.scores.transpose() * resid_after_x).transpose();
    fit.idio_resid = resid_after_x - fit.scores * fit.loadings.transpose();
    fit.sigma_eta_diag =
        fit.idio_resid.colwise().squaredNorm().transpose() / static_cast<double>(t);
    return fit;
}

}  // namespace fat
