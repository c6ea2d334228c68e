#include "qcorr/madelung.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace qcorr::madelung {

namespace {

void check_point(const GaussianState& s, const Eigen::VectorXd& x) {
    if (x.size() != s.dim())
        throw DomainError("field point dimension does not match the state");
    if (!x.allFinite())
        throw DomainError("field point has non-finite coordinates");
}

Eigen::MatrixXd spd_inverse(const CovMatrix& s) {
    Eigen::LLT<Eigen::MatrixXd> llt(s.entries());
    if (llt.info() != Eigen::Success)
        throw SingularSigmaError("covariance not invertible", 0.0);
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(s.dim(), s.dim()));
    return (0.5 * (inv + inv.transpose())).eval();
}

} // namespace

double density(const GaussianState& s, const Eigen::VectorXd& x) {
    check_point(s, x);
    Eigen::LLT<Eigen::MatrixXd> llt(s.sigma().entries());
    if (llt.info() != Eigen::Success)
        throw SingularSigmaError("covariance not invertible", s.t());

    // |2 pi Sigma|^{-1/2} from the Cholesky factor's diagonal.
    const auto d = s.dim();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
        log_det += std::log(llt.matrixL()(i, i));
    const double quad = x.dot(llt.solve(x));
    return std::exp(-0.5 * quad - log_det -
                    0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi));
}

Eigen::VectorXd velocity(const GaussianState& s, const Eigen::VectorXd& x) {
    check_point(s, x);
    Eigen::LLT<Eigen::MatrixXd> llt(s.sigma().entries());
    if (llt.info() != Eigen::Success)
        throw SingularSigmaError("covariance not invertible", s.t());
    return 0.5 * s.sigma_dot() * llt.solve(x);
}

double quantum_potential(const GaussianState& s, const Eigen::VectorXd& x,
                         const PhysConsts& c) {
    check_point(s, x);
    c.require_hbar();
    const Eigen::MatrixXd sinv = spd_inverse(s.sigma());
    const Eigen::VectorXd w = sinv * x; // Sigma^{-2} x = Sigma^{-1} (Sigma^{-1} x)
    const double h2m = c.hbar * c.hbar / c.mass;
    return 0.25 * h2m * sinv.trace() - 0.125 * h2m * w.dot(w);
}

Eigen::VectorXd quantum_force(const GaussianState& s, const Eigen::VectorXd& x,
                              const PhysConsts& c) {
    check_point(s, x);
    c.require_hbar();
    const Eigen::MatrixXd sinv = spd_inverse(s.sigma());
    return (c.hbar * c.hbar / (4.0 * c.mass)) * (sinv * (sinv * x));
}

Eigen::VectorXd fick_residual(const GaussianState& s, const Eigen::VectorXd& x) {
    check_point(s, x);
    const double rho = density(s, x);
    Eigen::LLT<Eigen::MatrixXd> llt(s.sigma().entries());
    if (llt.info() != Eigen::Success)
        throw SingularSigmaError("covariance not invertible", s.t());
    const Eigen::VectorXd grad_rho = -rho * llt.solve(x);
    return rho * velocity(s, x) + 0.5 * s.sigma_dot() * grad_rho;
}

FieldPoint evaluate_fields(const GaussianState& s, const Eigen::VectorXd& x,
                           const PhysConsts& c) {
    FieldPoint p;
    p.x = x;
    p.rho = density(s, x);
    p.v = velocity(s, x);
    p.q = quantum_potential(s, x, c);
    p.force = quantum_force(s, x, c);
    return p;
}

HydroResiduals hydro_residuals(const GaussianState& before, const GaussianState& at,
                               const GaussianState& after, const Eigen::VectorXd& x,
                               const PhysConsts& c, double max_width) {
    check_point(at, x);
    const double dt_minus = at.t() - before.t();
    const double dt_plus = after.t() - at.t();
    if (!(dt_minus > 0.0) || !(dt_plus > 0.0))
        throw DomainError("hydro_residuals: states must be time-ordered");
    if (std::abs(dt_plus - dt_minus) > 1e-9 * std::max(dt_plus, dt_minus))
        throw DomainError("hydro_residuals: stencil must be centered");
    const double width = after.t() - before.t();
    if (max_width > 0.0 && width > max_width)
        throw DomainError("hydro_residuals: stencil wider than max_width");

    const Eigen::MatrixXd sinv = spd_inverse(at.sigma());
    const Eigen::MatrixXd a = 0.5 * at.sigma_dot() * sinv; // v(x) = A x

    // Continuity: d_t rho + div(rho v); div(rho v) = rho (tr A - x.Sigma^{-1} A x).
    const double rho = density(at, x);
    const double drho_dt = (density(after, x) - density(before, x)) / width;
    const double continuity = drho_dt + rho * (a.trace() - x.dot(sinv * (a * x)));

    // Momentum balance: d_t v + (v.grad) v + gamma v - F/m with F the
    // quantum force; for the linear field (v.grad) v = A^2 x.
    const Eigen::VectorXd dv_dt = (velocity(after, x) - velocity(before, x)) / width;
    Eigen::VectorXd momentum = dv_dt + a * (a * x) + c.gamma * (a * x);
    if (c.hbar > 0.0)
        momentum -= quantum_force(at, x, c) / c.mass;

    return {continuity, std::move(momentum)};
}

Eigen::MatrixXd universal_integral(const GaussianState& s, const PhysConsts& c) {
    c.require_hbar();
    const auto d = s.dim();
    const Eigen::MatrixXd sinv = spd_inverse(s.sigma());
    // -<Sigma x (grad Q)^T>/m with grad Q = -hbar^2 Sigma^{-2} x / 4m and
    // <x x^T> = Sigma, evaluated as written rather than simplified.
    const double f = c.hbar * c.hbar / (4.0 * c.mass * c.mass);
    return f * s.sigma().entries() * s.sigma().entries() * sinv * sinv;
}

double fourth_moment_check(const GaussianState& s) {
    if (s.dim() != 2)
        throw DomainError("fourth_moment_check: state must be two-dimensional");
    const auto& m = s.sigma().entries();
    return 3.0 * m(0, 1) * m(1, 1);
}

} // namespace qcorr::madelung
