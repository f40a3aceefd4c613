#include "fat/regression.hpp"

#include "fat/stats.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fat {

std::string to_string(Procedure p) {
    switch (p) {
        case Procedure::Unadjusted: return "unadjusted";
        case Procedure::Fat: return "fat";
        case Procedure::OracleFat: return "oracle_fat";
        case Procedure::PcaPfa: return "pca_pfa";
    }
    throw std::logic_error("unknown procedure");
}

Procedure procedure_from_string(const std::string& name) {
    if (name == "unadjusted") return Procedure::Unadjusted;
    if (name == "fat") return Procedure::Fat;
    if (name == "oracle_fat" || name == "oracle") return Procedure::OracleFat;
    if (name == "pca_pfa" || name == "pfa") return Procedure::PcaPfa;
    throw std::invalid_argument("unknown procedure '" + name + "'");
}

Annihilator::Annihilator(Eigen::MatrixXd source) : source_(std::move(source)) {
    const Eigen::Index k = source_.cols();
    if (k == 0) {
        gram_inverse_.resize(0, 0);
        return;
    }
    const Eigen::MatrixXd gram = source_.transpose() * source_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
    if (ev(0) <= 1e-12 * std::max(ev(k - 1), 0.0)) {
        throw std::invalid_argument("rank-deficient covariates: cannot build projector");
    }
    gram_inverse_ =
        eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd Annihilator::apply(const Eigen::MatrixXd& m) const {
    if (source_.cols() == 0) return m;
    return m - source_ * (gram_inverse_ * (source_.transpose() * m));
}

Eigen::VectorXd Annihilator::apply(const Eigen::VectorXd& v) const {
    if (source_.cols() == 0) return v;
    return v - source_ * (gram_inverse_ * (source_.transpose() * v));
}

InterceptFit fit_intercepts(const PanelData& panel) {
    validate_panel(panel);
    const Eigen::Index t = panel.n_periods();
    const Eigen::Index p = panel.n_covariates();

    const Annihilator annihilate_x(panel.covariates);

    InterceptFit fit;
    fit.q_one = annihilate_x.apply(Eigen::VectorXd(Eigen::VectorXd::Ones(t)));
    fit.one_q_one = fit.q_one.sum();
    if (!(fit.one_q_one > 1e-10 * static_cast<double>(t))) {
        throw std::invalid_argument(
            "constant vector lies in the covariate span; intercepts are not identified");
    }
    fit.mu_hat = panel.responses * fit.q_one / fit.one_q_one;
    fit.resid_after_x = annihilate_x.apply(Eigen::MatrixXd(panel.responses.transpose()));

    Eigen::MatrixXd with_const(t, p + 1);
    with_const.col(0).setOnes();
    with_const.rightCols(p) = panel.covariates;
    const Annihilator annihilate_full(std::move(with_const));
    fit.resid_full = annihilate_full.apply(Eigen::MatrixXd(panel.responses.transpose()));
    fit.sigma_e_diag =
        fit.resid_full.colwise().squaredNorm().transpose() / static_cast<double>(t);
    return fit;
}

TestBattery unadjusted_battery(const InterceptFit& fit,
                               const std::vector<std::string>* unit_ids) {
    const Eigen::Index n = fit.n_units();
    const double scale = std::sqrt(fit.one_q_one);
    TestBattery battery;
    battery.procedure = Procedure::Unadjusted;
    battery.statistics.resize(n);
    battery.p_values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(fit.sigma_e_diag(i) > 0.0)) {
            std::ostringstream msg;
            msg << "unit " << (unit_ids ? (*unit_ids)[i] : std::to_string(i + 1))
                << " has zero residual variance; its response lies in the covariate span";
            throw std::invalid_argument(msg.str());
        }
        battery.statistics(i) = (scale * fit.mu_hat(i)) / std::sqrt(fit.sigma_e_diag(i));
        battery.p_values(i) = two_sided_p(battery.statistics(i));
    }
    return battery;
}

}  // namespace fat
