#pragma once

#include "qcorr/gaussian_state.hpp"
#include "qcorr/ode.hpp"
#include "qcorr/phys_consts.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qcorr::dynamics {

struct SolverConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 0.0; ///< 0 = unbounded
    double min_step = 0.0; ///< 0 = roundoff-limited
    bool spd_check_every_step = true;
    double spd_tol = kDefaultSpdTol; ///< relative, against max diagonal

    void validate() const {
        if (!(rel_tol > 0.0) || !(rel_tol < 1.0))
            throw DomainError("SolverConfig: rel_tol must be in (0, 1)");
        if (abs_tol < 0.0)
            throw DomainError("SolverConfig: abs_tol must be >= 0");
        if (max_step > 0.0 && min_step > 0.0 && !(min_step < max_step))
            throw DomainError("SolverConfig: min_step must be < max_step");
    }

    ode::StepperOptions stepper() const { return {rel_tol, abs_tol, max_step, min_step, 0.0}; }
};

struct SolverStats {
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;
    std::size_t n_rhs = 0;
    double max_sym_defect = 0.0; ///< max |Sigma - Sigma^T| entry before re-symmetrization
    double max_ode_residual = 0.0;
};

/// Which flow produced a trajectory; selects the invariant to monitor.
enum class Regime { vacuum, friction, overdamped, thermo, classical };

std::string to_string(Regime r);

/// Time grid plus per-time states and derived observables. Scalar
/// observables r and r_sigma4 are NaN unless dim == 2;
/// momentum_cov_residual is NaN unless the trajectory is a vacuum one.
struct Trajectory {
    std::vector<double> times;
    std::vector<GaussianState> states;

    std::vector<double> sigma2;                ///< mean diagonal of Sigma
    std::vector<double> r;                     ///< pair correlation (dim 2)
    std::vector<double> r_sigma4;              ///< r * sigma2^2 (dim 2)
    std::vector<double> energy;                ///< hbar^2 / (2 m sigma2)
    std::vector<double> momentum_cov_residual; ///< free-spreading consistency
    std::vector<double> ode_residual;          ///< |interp' - f| / |f| at output times

    SolverStats stats;
    Regime regime = Regime::vacuum;
    PhysConsts consts;

    std::size_t size() const noexcept { return times.size(); }
};

/// Scalar dissipative Ermakov trajectory sigma(t).
struct ScalarTrajectory {
    std::vector<double> times;
    std::vector<double> sigma;
    std::vector<double> sigma_dot;
    SolverStats stats;
};

/// Acceleration of the dissipative covariance equation,
///   Sigma'' = Sigma' Sigma^{-1} Sigma' / 2 - gamma Sigma' + (hbar/m)^2 Sigma^{-1} / 2.
/// Throws SingularSigmaError if Sigma cannot be Cholesky-factored.
Eigen::MatrixXd eq_covariance_acceleration(const Eigen::MatrixXd& sigma,
                                           const Eigen::MatrixXd& sigma_dot,
                                           const PhysConsts& c, double t = 0.0);

/// Rate of the overdamped thermo-quantum moment equation,
///   Sigma' = (hbar^2 / 2 m^2 gamma) Sigma^{-1} + 2 D I,  D = kbt / (m gamma).
Eigen::MatrixXd thermo_moment_rate(const Eigen::MatrixXd& sigma, const PhysConsts& c,
                                   double t = 0.0);

/// Acceleration of the scalar dissipative Ermakov equation,
///   sigma'' = -gamma sigma' + (hbar / 2m)^2 / sigma^3.
double ermakov_acceleration(double sigma, double sigma_dot, const PhysConsts& c);

/// Integrates the second-order covariance equation as a first-order system
/// in (Sigma, Sigma'), with per-step symmetrization and SPD monitoring.
/// grid must be non-decreasing and start at s0.t().
Trajectory integrate_eq_covariance(const GaussianState& s0, const PhysConsts& c,
                                   std::span<const double> grid, const SolverConfig& cfg);

/// Integrates the scalar dissipative Ermakov equation.
ScalarTrajectory integrate_ermakov(double sigma0, double sigma_dot0, const PhysConsts& c,
                                   std::span<const double> grid, const SolverConfig& cfg);

/// Integrates the first-order thermo-quantum moment equation. At kbt = 0
/// this is the overdamped quantum flow; at hbar = 0 it is classical
/// diffusion.
Trajectory integrate_thermo_moments(const CovMatrix& sigma0, const PhysConsts& c,
                                    std::span<const double> grid, const SolverConfig& cfg);

enum class InvariantKind {
    vacuum_spreading, ///< residual of the free-spreading closed form
    r_sigma4,         ///< overdamped integral of motion r sigma^4
    off_diagonal      ///< constancy of Sigma's off-diagonal (classical)
};

std::string to_string(InvariantKind k);

struct InvariantReport {
    InvariantKind kind;
    std::vector<double> drift;     ///< per-time relative drift
    double max_drift = 0.0;
    std::optional<double> first_exceeding; ///< first time drift > tolerance
    double tolerance = 0.0;
};

/// Monitors the invariant implied by the trajectory's regime. Report-only.
InvariantReport monitor_invariants(const Trajectory& traj, const PhysConsts& c);

/// Monitors a specific invariant (e.g. to demonstrate that a non-invariant
/// drifts).
InvariantReport monitor_invariants(const Trajectory& traj, const PhysConsts& c,
                                   InvariantKind kind, double tolerance);

} // namespace qcorr::dynamics
