#include "qcorr/gaussian_state.hpp"

namespace qcorr {

GaussianState::GaussianState(CovMatrix sigma, Eigen::MatrixXd sigma_dot, double t)
    : sigma_(std::move(sigma)), sigma_dot_(std::move(sigma_dot)), t_(t) {
    if (sigma_dot_.rows() != sigma_.dim() || sigma_dot_.cols() != sigma_.dim())
        throw DomainError("GaussianState: sigma_dot dimension mismatch");
    if (!sigma_dot_.allFinite())
        throw DomainError("GaussianState: sigma_dot has non-finite entries");
    const double scale = std::max(sigma_dot_.cwiseAbs().maxCoeff(), 1e-300);
    const double asym = (sigma_dot_ - sigma_dot_.transpose()).cwiseAbs().maxCoeff();
    if (asym > kDefaultSymTol * scale)
        throw NotSymmetricError("GaussianState: sigma_dot asymmetric beyond tolerance");
    sigma_dot_ = 0.5 * (sigma_dot_ + sigma_dot_.transpose()).eval();
}

GaussianState GaussianState::at_rest(CovMatrix sigma, double t) {
    const auto d = sigma.dim();
    return GaussianState(std::move(sigma), Eigen::MatrixXd::Zero(d, d), t);
}

} // namespace qcorr
