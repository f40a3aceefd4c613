#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fat/latent.hpp"
#include "fat/regression.hpp"
#include "fat/rng.hpp"
#include "fat/sim.hpp"

#include "oracles.hpp"

#include <random>

using namespace fat;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng = make_stream(seed, 0);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

}  // namespace

TEST_CASE("gram_eigen of a zero matrix is all zeros") {
    GramSpectrum s = gram_eigen(Eigen::MatrixXd::Zero(5, 8));
    CHECK(s.eigenvalues.maxCoeff() == 0.0);
    CHECK(s.eigenvalues.minCoeff() == 0.0);
}

TEST_CASE("gram_eigen of a rank-1 block has one known eigenvalue") {
    const int t = 6, n = 9;
    Eigen::VectorXd u = random_matrix(t, 1, 3);
    Eigen::VectorXd v = random_matrix(n, 1, 4);
    const Eigen::MatrixXd resid = u * v.transpose();  // T x N
    GramSpectrum s = gram_eigen(resid);
    const double expected = u.squaredNorm() * v.squaredNorm() / (t * n);
    CHECK(s.eigenvalues(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(s.eigenvalues(1) <= 1e-12 * expected);
}

TEST_CASE("gram_eigen matches the Jacobi oracle") {
    const int t = 6, n = 10;
    const Eigen::MatrixXd resid = random_matrix(t, n, 17);
    GramSpectrum s = gram_eigen(resid);
    const Eigen::MatrixXd gram = resid * resid.transpose() / double(t * n);
    oracles::JacobiResult ref = oracles::jacobi_eigen(gram);
    for (int j = 0; j < t; ++j) {
        CHECK(s.eigenvalues(j) == doctest::Approx(ref.values(j)).epsilon(1e-8));
    }
    // Reconstruction and orthonormality.
    const Eigen::MatrixXd recon = s.eigenvectors * s.eigenvalues.asDiagonal() *
                                  s.eigenvectors.transpose();
    CHECK((recon - gram).norm() <= 1e-8 * s.eigenvalues.sum());
    CHECK((s.eigenvectors.transpose() * s.eigenvectors -
           Eigen::MatrixXd::Identity(t, t)).norm() <= 1e-8);
    // Deterministic sign convention.
    for (int j = 0; j < t; ++j) {
        Eigen::Index arg = 0;
        s.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(s.eigenvectors(arg, j) > 0.0);
    }
    CHECK_THROWS_AS(gram_eigen(Eigen::MatrixXd::Constant(
                        4, 4, std::numeric_limits<double>::quiet_NaN())),
                    std::invalid_argument);
}

TEST_CASE("eigenvalue-ratio selection on stated spectra") {
    GramSpectrum s;
    s.eigenvalues.resize(4);
    s.eigenvalues << 9, 1, 0.9, 0.8;
    CHECK(select_factor_count(s, 3) == 1);
    s.eigenvalues << 10, 8, 1, 0.9;
    CHECK(select_factor_count(s, 3) == 2);
    // Ties break toward the smallest index.
    s.eigenvalues << 4, 2, 1, 1;
    CHECK(select_factor_count(s, 2) == 1);
    // Zero denominators are skipped...
    s.eigenvalues << 4, 0, 0, 0;
    CHECK_THROWS_WITH_AS(select_factor_count(s, 3), doctest::Contains("degenerate"),
                         std::invalid_argument);
    // ...and only the defined ratios compete.
    s.eigenvalues << 9, 3, 0, 0;
    CHECK(select_factor_count(s, 3) == 1);
    CHECK_THROWS_AS(select_factor_count(s, 0), std::invalid_argument);
    CHECK_THROWS_AS(select_factor_count(s, 4), std::invalid_argument);
}

TEST_CASE("fit_latent r = 0 is the identity pass-through") {
    const Eigen::MatrixXd resid = random_matrix(7, 5, 23);
    LatentFactorFit fit = fit_latent(resid, 0);
    CHECK(fit.scores.cols() == 0);
    CHECK(fit.loadings.cols() == 0);
    CHECK(fit.idio_resid == resid);
    for (int i = 0; i < 5; ++i) {
        CHECK(fit.sigma_eta_diag(i) ==
              doctest::Approx(resid.col(i).squaredNorm() / 7.0).epsilon(1e-15));
    }
}

TEST_CASE("fit_latent recovers an exact planted factor") {
    const int t = 10, n = 14;
    Eigen::VectorXd z = random_matrix(t, 1, 31);
    Eigen::VectorXd g = random_matrix(n, 1, 32);
    const Eigen::MatrixXd resid = z * g.transpose();
    LatentFactorFit fit = fit_latent(resid, 1);
    CHECK((fit.scores * fit.loadings.transpose() - resid).norm() <= 1e-8 * resid.norm());
    CHECK(fit.sigma_eta_diag.maxCoeff() <= 1e-16 * resid.squaredNorm());
}

TEST_CASE("fit_latent equals the best rank-2 column-space approximation") {
    const int t = 20, n = 40;
    const Eigen::MatrixXd resid = random_matrix(t, n, 47);
    LatentFactorFit fit = fit_latent(resid, 2);
    // Independent route: project onto the top-2 eigenvectors of the Gram
    // matrix from the Jacobi oracle. The projector is basis-free, so this is
    // immune to sign and rotation differences.
    oracles::JacobiResult ref =
        oracles::jacobi_eigen(resid * resid.transpose() / double(t * n));
    const Eigen::MatrixXd u = ref.vectors.leftCols(2);
    const Eigen::MatrixXd best = u * u.transpose() * resid;
    CHECK((fit.scores * fit.loadings.transpose() - best).norm() <= 1e-8 * resid.norm());
}

TEST_CASE("latent fit invariants on a noisy instance") {
    const int t = 30, n = 60;
    Eigen::MatrixXd resid = random_matrix(t, n, 53);
    resid += 3.0 * random_matrix(t, 2, 54) * random_matrix(n, 2, 55).transpose();
    LatentFactorFit fit = fit_latent(resid, 2);

    // Scores are scaled eigenvectors: Z'Z = T * I.
    const Eigen::MatrixXd zz = fit.scores.transpose() * fit.scores;
    CHECK((zz - double(t) * Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-6 * double(t));

    // Idiosyncratic residuals orthogonal to every score column.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double ip = std::abs(fit.idio_resid.col(i).dot(fit.scores.col(j)));
            CHECK(ip <= 1e-8 * std::max(fit.idio_resid.col(i).norm() *
                                        fit.scores.col(j).norm(), 1e-30));
        }
    }

    // Projection removes variance: sigma_eta <= per-column input variance,
    // with equality exactly when the loading row vanishes.
    for (int i = 0; i < n; ++i) {
        const double input_var = resid.col(i).squaredNorm() / double(t);
        CHECK(fit.sigma_eta_diag(i) <= input_var + 1e-10);
        const double gap = input_var - fit.sigma_eta_diag(i);
        const double loading_part = double(t) * fit.loadings.row(i).squaredNorm() / double(t);
        CHECK(gap == doctest::Approx(loading_part).epsilon(1e-8));
    }

    CHECK_THROWS_AS(fit_latent(resid, -1), std::invalid_argument);
    CHECK_THROWS_AS(fit_latent(resid, 30), std::invalid_argument);
}

TEST_CASE("downstream quantities ignore score sign flips") {
    const Eigen::MatrixXd resid = random_matrix(12, 8, 61);
    LatentFactorFit fit = fit_latent(resid, 1);
    LatentFactorFit flipped = fit;
    flipped.scores = -fit.scores;
    flipped.loadings = -fit.loadings;
    CHECK((flipped.scores * flipped.loadings.transpose() -
           fit.scores * fit.loadings.transpose()).norm() == 0.0);
}

TEST_CASE("ratio criterion finds the planted factor count across replications") {
    // Sparse-signal generated panels; the residual spectrum must point at
    // the true count in at least 95% of replications.
    SimConfig config;
    config.n_units = 500;
    config.n_periods = 100;
    config.pi0 = 0.95;
    config.mu_signal = 1.0;
    config.n_latent = 1;
    config.seed = 99;
    int hits = 0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
        auto [panel, truth] = generate_dataset(config, rep);
        InterceptFit fit = fit_intercepts(panel);
        GramSpectrum s = gram_eigen(fit.resid_after_x);
        if (select_factor_count(s, default_pi_max(config.n_periods)) == 1) ++hits;
    }
    CHECK(hits >= static_cast<int>(0.95 * reps));
}

TEST_CASE("default_pi_max") {
    CHECK(default_pi_max(100) == 15);
    CHECK(default_pi_max(20) == 10);
    CHECK(default_pi_max(8) == 4);
}
