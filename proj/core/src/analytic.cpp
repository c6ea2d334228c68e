#include "qcorr/analytic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace qcorr::analytic {

namespace {

Eigen::MatrixXd spd_inverse(const CovMatrix& s) {
    const auto d = s.dim();
    Eigen::LLT<Eigen::MatrixXd> llt(s.entries());
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("spd inverse: Cholesky factorization failed");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
    return 0.5 * (inv + inv.transpose()).eval();
}

void require_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw DomainError("time must be finite and >= 0");
}

} // namespace

CovMatrix vacuum_covariance(const CovMatrix& sigma0, double t, const PhysConsts& c) {
    c.validate();
    c.require_hbar();
    require_time(t);
    const double a = c.hbar * t / (2.0 * c.mass);
    Eigen::MatrixXd out = sigma0.entries() + (a * a) * spd_inverse(sigma0);
    return validate_spd(out);
}

Eigen::MatrixXd momentum_covariance(const CovMatrix& sigma0, const PhysConsts& c) {
    c.validate();
    c.require_hbar();
    return (c.hbar * c.hbar / 4.0) * spd_inverse(sigma0);
}

PairStats vacuum_pair(const PairStats& p0, double t, const PhysConsts& c) {
    p0.validate();
    c.validate();
    c.require_hbar();
    require_time(t);
    const double a = c.hbar * t / (2.0 * c.mass);
    const double s2 = p0.sigma2 + a * a / (p0.sigma2 * (1.0 - p0.r * p0.r));
    const double r = (2.0 * p0.sigma2 / s2 - 1.0) * p0.r;
    return {s2, r};
}

double tau1(const PairStats& p0, const PhysConsts& c) {
    p0.validate();
    c.validate();
    c.require_hbar();
    return 2.0 * c.mass * p0.sigma2 * std::sqrt(1.0 - p0.r * p0.r) / c.hbar;
}

double tau2(const PairStats& p0, const PhysConsts& c) {
    p0.validate();
    c.validate();
    c.require_hbar();
    c.require_gamma();
    const double ms = c.mass * p0.sigma2 / c.hbar;
    return c.gamma * ms * ms;
}

double tau3(const PairStats& p0, const PhysConsts& c) {
    p0.validate();
    c.validate();
    c.require_gamma();
    c.require_kbt();
    return c.gamma * c.mass * p0.sigma2 / (2.0 * c.kbt);
}

Timescales timescales(const PairStats& p0, const PhysConsts& c) {
    Timescales out;
    out.tau1 = tau1(p0, c);
    if (c.gamma > 0.0)
        out.tau2 = tau2(p0, c);
    if (c.gamma > 0.0 && c.kbt > 0.0)
        out.tau3 = tau3(p0, c);
    return out;
}

CovMatrix overdamped_covariance(const CovMatrix& sigma0, double t, const PhysConsts& c) {
    c.validate();
    c.require_hbar();
    c.require_gamma();
    require_time(t);
    const double shift = c.hbar * c.hbar * t / (c.mass * c.mass * c.gamma);

    // Sigma0^2 + shift I shares Sigma0's eigenvectors; take the principal
    // square root on the spectrum.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma0.entries());
    if (es.info() != Eigen::Success)
        throw NotPositiveDefiniteError("overdamped_covariance: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam[i] = std::sqrt(lam[i] * lam[i] + shift);
    Eigen::MatrixXd out =
        es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    return validate_spd(out);
}

double overdamped_pair_r(double r0, double t, double tau2) {
    if (!(std::abs(r0) < 1.0))
        throw DomainError("overdamped_pair_r: |r0| must be < 1");
    if (!(tau2 > 0.0))
        throw DomainError("overdamped_pair_r: tau2 must be > 0");
    require_time(t);
    if (r0 == 0.0)
        return 0.0;
    const double a = 1.0 + r0 * r0 + t / tau2;
    return 2.0 * r0 / (a + std::sqrt(a * a - 4.0 * r0 * r0));
}

PairStats overdamped_pair(const PairStats& p0, double t, const PhysConsts& c) {
    p0.validate();
    const double r = overdamped_pair_r(p0.r, t, tau2(p0, c));
    const double s04 = p0.sigma2 * p0.sigma2;
    const double s4 =
        (s04 * (1.0 + p0.r * p0.r) + c.hbar * c.hbar * t / (c.mass * c.mass * c.gamma)) /
        (1.0 + r * r);
    return {std::sqrt(s4), r};
}

CovMatrix classical_covariance(const CovMatrix& sigma0, double t, const PhysConsts& c) {
    c.validate();
    c.require_gamma();
    c.require_kbt();
    require_time(t);
    const double d2t = 2.0 * c.diffusion() * t;
    Eigen::MatrixXd out = sigma0.entries();
    out.diagonal().array() += d2t;
    return validate_spd(out);
}

double energy(double sigma2, const PhysConsts& c) {
    c.validate();
    if (!(sigma2 > 0.0))
        throw DomainError("energy: sigma2 must be > 0");
    return c.hbar * c.hbar / (2.0 * c.mass * sigma2);
}

} // namespace qcorr::analytic
