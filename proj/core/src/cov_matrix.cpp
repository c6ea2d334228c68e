#include "qcorr/cov_matrix.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace qcorr {

CovMatrix CovMatrix::identity(Eigen::Index dim) {
    return validate_spd(Eigen::MatrixXd::Identity(dim, dim));
}

CovMatrix validate_spd(const Eigen::MatrixXd& m, double spd_tol, double sym_tol) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw DomainError("validate_spd: matrix must be square and non-empty");
    if (!m.allFinite())
        throw DomainError("validate_spd: matrix has non-finite entries");

    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > sym_tol * std::max(scale, 1e-300)) {
        std::ostringstream os;
        os << "validate_spd: asymmetry " << asym << " exceeds tolerance " << sym_tol * scale;
        throw NotSymmetricError(os.str());
    }

    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());

    const double max_diag = sym.diagonal().maxCoeff();
    const double threshold = spd_tol * max_diag;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NotPositiveDefiniteError("validate_spd: eigendecomposition failed");
    const double min_eig = es.eigenvalues().minCoeff();
    const double max_eig = es.eigenvalues().maxCoeff();
    if (!(min_eig > threshold)) {
        std::ostringstream os;
        os << "validate_spd: min eigenvalue " << min_eig << " not above threshold " << threshold;
        throw NotPositiveDefiniteError(os.str());
    }
    return CovMatrix(std::move(sym), min_eig, max_eig);
}

CovMatrix pair_covariance(const PairStats& p) {
    p.validate();
    Eigen::MatrixXd m(2, 2);
    m << p.sigma2, p.r * p.sigma2, p.r * p.sigma2, p.sigma2;
    // Eigenvalues are sigma2 (1 +- r) > 0, but a validation tolerance can
    // still reject r extremely close to +-1; let that propagate.
    return validate_spd(m);
}

PairStats extract_pair_stats(const CovMatrix& s, std::optional<double> max_diag_asym) {
    if (s.dim() != 2)
        throw DomainError("extract_pair_stats: matrix must be 2x2");
    const double s11 = s(0, 0), s22 = s(1, 1), s12 = s(0, 1);
    const double sigma2 = 0.5 * (s11 + s22);
    if (max_diag_asym && std::abs(s11 - s22) > *max_diag_asym * sigma2)
        throw DomainError("extract_pair_stats: unequal diagonals beyond strict tolerance");
    return {sigma2, s12 / std::sqrt(s11 * s22)};
}

} // namespace qcorr
