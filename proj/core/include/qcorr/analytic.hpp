#pragma once

#include "qcorr/cov_matrix.hpp"
#include "qcorr/phys_consts.hpp"

#include <optional>

namespace qcorr::analytic {

/// Characteristic times of the correlation dynamics.
///
/// tau1: vacuum decorrelation time 2 m s0^2 sqrt(1 - r0^2) / hbar.
/// tau2: overdamped relaxation time gamma (m s0^2 / hbar)^2 (needs gamma > 0).
/// tau3: classical relaxation time gamma m s0^2 / (2 kbt) (needs kbt > 0).
/// tau2/tau3 are absent when their defining parameters are absent.
struct Timescales {
    double tau1 = 0.0;
    std::optional<double> tau2;
    std::optional<double> tau3;
};

/// Free spreading of the covariance in vacuum:
///   Sigma(t) = Sigma0 + (hbar t / 2m)^2 Sigma0^{-1}.
CovMatrix vacuum_covariance(const CovMatrix& sigma0, double t, const PhysConsts& c);

/// Momentum covariance of the initial Gaussian, hbar^2 Sigma0^{-1} / 4.
/// Constant in time for free particles.
Eigen::MatrixXd momentum_covariance(const CovMatrix& sigma0, const PhysConsts& c);

/// Two-particle reduction of vacuum_covariance:
///   s2(t) = s0^2 + (hbar t / 2m)^2 / (s0^2 (1 - r0^2)),
///   r(t)  = (2 s0^2 / s2 - 1) r0.
PairStats vacuum_pair(const PairStats& p0, double t, const PhysConsts& c);

/// Vacuum decorrelation time: the unique instant where vacuum_pair's r
/// crosses zero. Requires |r0| < 1 and hbar > 0.
double tau1(const PairStats& p0, const PhysConsts& c);

/// Overdamped relaxation time gamma (m s0^2 / hbar)^2.
double tau2(const PairStats& p0, const PhysConsts& c);

/// Classical relaxation time gamma m s0^2 / (2 kbt).
double tau3(const PairStats& p0, const PhysConsts& c);

/// All applicable timescales; tau2/tau3 filled only when gamma/kbt allow.
Timescales timescales(const PairStats& p0, const PhysConsts& c);

/// Strong-friction (overdamped) evolution:
///   Sigma(t) = sqrtm( Sigma0^2 + (hbar^2 t / m^2 gamma) I ),
/// the principal square root via symmetric eigendecomposition.
CovMatrix overdamped_covariance(const CovMatrix& sigma0, double t, const PhysConsts& c);

/// Overdamped correlation decay. Solves
///   r0 r^2 - (1 + r0^2 + t/tau2) r + r0 = 0
/// on the physical branch (r(0) = r0, r -> 0), evaluated in the
/// cancellation-free form 2 r0 / (A + sqrt(A^2 - 4 r0^2)). Returns the
/// continuous limit 0 at r0 = 0.
double overdamped_pair_r(double r0, double t, double tau2);

/// Two-particle reduction of the overdamped evolution: r from
/// overdamped_pair_r and s2 from s^4 (1 + r^2) = s0^4 (1 + r0^2) + hbar^2 t / m^2 gamma.
PairStats overdamped_pair(const PairStats& p0, double t, const PhysConsts& c);

/// Classical diffusive evolution Sigma(t) = Sigma0 + 2 D t I with the
/// Einstein constant D = kbt / (m gamma). Requires gamma > 0 and kbt > 0.
CovMatrix classical_covariance(const CovMatrix& sigma0, double t, const PhysConsts& c);

/// Characteristic energy hbar^2 / (2 m sigma2) of a wavepacket of
/// dispersion sigma2.
double energy(double sigma2, const PhysConsts& c);

} // namespace qcorr::analytic
