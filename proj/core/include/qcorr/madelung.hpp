#pragma once

#include "qcorr/gaussian_state.hpp"
#include "qcorr/phys_consts.hpp"

namespace qcorr::madelung {

/// Hydrodynamic fields of a Gaussian state at one position.
struct FieldPoint {
    Eigen::VectorXd x;
    double rho = 0.0;      ///< probability density
    Eigen::VectorXd v;     ///< hydrodynamic velocity
    double q = 0.0;        ///< Bohm quantum potential
    Eigen::VectorXd force; ///< -grad q
};

/// Zero-mean normal density |2 pi Sigma|^{-1/2} exp(-x . Sigma^{-1} x / 2).
double density(const GaussianState& s, const Eigen::VectorXd& x);

/// Hydrodynamic velocity field v(x) = Sigma' Sigma^{-1} x / 2.
Eigen::VectorXd velocity(const GaussianState& s, const Eigen::VectorXd& x);

/// Bohm quantum potential of the Gaussian density, in closed form:
///   Q(x) = (hbar^2 / 4m) tr(Sigma^{-1}) - (hbar^2 / 8m) x . Sigma^{-2} x.
double quantum_potential(const GaussianState& s, const Eigen::VectorXd& x, const PhysConsts& c);

/// Quantum force -grad Q = hbar^2 Sigma^{-2} x / 4m. Does not separate into
/// per-particle contributions when Sigma has off-diagonal entries.
Eigen::VectorXd quantum_force(const GaussianState& s, const Eigen::VectorXd& x,
                              const PhysConsts& c);

/// Residual of the Fick law rho v = -Sigma' grad(rho) / 2, which holds
/// identically for Gaussian states. Returns rho v + Sigma' grad(rho) / 2.
Eigen::VectorXd fick_residual(const GaussianState& s, const Eigen::VectorXd& x);

/// All fields at one position.
FieldPoint evaluate_fields(const GaussianState& s, const Eigen::VectorXd& x,
                           const PhysConsts& c);

struct HydroResiduals {
    double continuity = 0.0;  ///< d_t rho + div(rho v)
    Eigen::VectorXd momentum; ///< d_t v + (v.grad) v + gamma v + grad(Q)/m
};

/// Pointwise residuals of the continuity and momentum-balance equations on
/// a centered three-state time stencil. Spatial derivatives are analytic;
/// only d_t uses finite differences, so both residuals vanish at
/// second order in the stencil width on an exact trajectory.
/// The stencil must be symmetric; widths above max_width are rejected.
HydroResiduals hydro_residuals(const GaussianState& before, const GaussianState& at,
                               const GaussianState& after, const Eigen::VectorXd& x,
                               const PhysConsts& c, double max_width = 0.0);

/// The expectation -< Sigma x (grad Q)^T / m >, evaluated through the
/// closed-form second moment <x x^T> = Sigma. Equals (hbar/2m)^2 I for
/// every SPD Sigma.
Eigen::MatrixXd universal_integral(const GaussianState& s, const PhysConsts& c);

/// Gaussian fourth moment <x1 x2^3> = 3 <x1 x2> <x2^2> (Isserlis), equal to
/// 3 r sigma^4 in the symmetric pair parametrization. Requires dim == 2.
double fourth_moment_check(const GaussianState& s);

} // namespace qcorr::madelung
