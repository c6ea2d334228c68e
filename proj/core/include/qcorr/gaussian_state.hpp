#pragma once

#include "qcorr/cov_matrix.hpp"

#include <utility>

namespace qcorr {

/// Complete state of the Gaussian dynamics: covariance, its time
/// derivative, and the time they refer to.
class GaussianState {
public:
    /// sigma_dot must be symmetric (to kDefaultSymTol, relative) and of the
    /// same dimension as sigma; it is symmetrized on input.
    GaussianState(CovMatrix sigma, Eigen::MatrixXd sigma_dot, double t = 0.0);

    /// State with vanishing covariance velocity (initially real Gaussian).
    static GaussianState at_rest(CovMatrix sigma, double t = 0.0);

    const CovMatrix& sigma() const noexcept { return sigma_; }
    const Eigen::MatrixXd& sigma_dot() const noexcept { return sigma_dot_; }
    double t() const noexcept { return t_; }
    Eigen::Index dim() const noexcept { return sigma_.dim(); }

private:
    CovMatrix sigma_;
    Eigen::MatrixXd sigma_dot_;
    double t_;
};

} // namespace qcorr
