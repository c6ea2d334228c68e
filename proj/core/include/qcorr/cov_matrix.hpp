#pragma once

#include "qcorr/errors.hpp"

#include <Eigen/Dense>

#include <optional>

namespace qcorr {

/// Default relative tolerance for positive definiteness: the smallest
/// eigenvalue must exceed kDefaultSpdTol times the largest diagonal entry.
inline constexpr double kDefaultSpdTol = 1e-10;

/// Relative asymmetry above which validate_spd refuses to symmetrize.
inline constexpr double kDefaultSymTol = 1e-12;

/// Validated symmetric positive-definite covariance matrix (units length^2).
///
/// Construction always goes through validate_spd, so a CovMatrix held by
/// value is symmetric exactly (symmetrization is applied on input) and has
/// its smallest eigenvalue above the validation threshold.
class CovMatrix {
public:
    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    Eigen::Index dim() const noexcept { return entries_.rows(); }

    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

    /// Smallest/largest eigenvalue, cached from validation.
    double min_eigenvalue() const noexcept { return min_eig_; }
    double max_eigenvalue() const noexcept { return max_eig_; }

    /// Spectral condition number.
    double condition() const noexcept { return max_eig_ / min_eig_; }

    static CovMatrix identity(Eigen::Index dim);

private:
    friend CovMatrix validate_spd(const Eigen::MatrixXd&, double, double);
    CovMatrix(Eigen::MatrixXd m, double min_eig, double max_eig)
        : entries_(std::move(m)), min_eig_(min_eig), max_eig_(max_eig) {}

    Eigen::MatrixXd entries_;
    double min_eig_;
    double max_eig_;
};

/// Validates a square real matrix as SPD and returns it as a CovMatrix.
///
/// The input is symmetrized to (m + m^T)/2; asymmetry larger than
/// sym_tol * max|entry| raises NotSymmetricError first. The smallest
/// eigenvalue must exceed spd_tol * max(diagonal), otherwise
/// NotPositiveDefiniteError.
CovMatrix validate_spd(const Eigen::MatrixXd& m, double spd_tol = kDefaultSpdTol,
                       double sym_tol = kDefaultSymTol);

/// Per-particle dispersion and correlation coefficient of the symmetric
/// two-particle covariance sigma^2 [[1, r], [r, 1]].
struct PairStats {
    double sigma2 = 1.0; ///< position dispersion, > 0
    double r = 0.0;      ///< correlation coefficient, |r| < 1 strictly

    void validate() const {
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw DomainError("PairStats: sigma2 must be finite and > 0");
        if (!(std::abs(r) < 1.0))
            throw DomainError("PairStats: |r| must be < 1");
    }
};

/// Builds the 2x2 covariance [[s2, r s2], [r s2, s2]] from pair statistics.
CovMatrix pair_covariance(const PairStats& p);

/// Inverse of pair_covariance. For unequal diagonals sigma2 is the
/// arithmetic mean of the two dispersions; if max_diag_asym is given,
/// inputs with |S11 - S22| > max_diag_asym * sigma2 are rejected.
PairStats extract_pair_stats(const CovMatrix& s,
                             std::optional<double> max_diag_asym = std::nullopt);

} // namespace qcorr
