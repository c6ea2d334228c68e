#include "qcorr/dynamics.hpp"

#include "qcorr/analytic.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace qcorr::dynamics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd spd_inverse_or_throw(const Eigen::MatrixXd& sigma, double t) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw SingularSigmaError("covariance not invertible inside right-hand side", t);
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
    return symmetrized(inv);
}

// Packing of (Sigma, Sigma') into the flat integration state.
void pack(const Eigen::MatrixXd& s, const Eigen::MatrixXd& v, Eigen::VectorXd& y) {
    const auto n = s.size();
    y.resize(2 * n);
    Eigen::Map<Eigen::MatrixXd>(y.data(), s.rows(), s.cols()) = s;
    Eigen::Map<Eigen::MatrixXd>(y.data() + n, s.rows(), s.cols()) = v;
}

struct ObservableRow {
    double sigma2, r, r_sigma4, energy;
};

ObservableRow observables_of(const Eigen::MatrixXd& sigma, const PhysConsts& c) {
    ObservableRow row{};
    row.sigma2 = sigma.diagonal().mean();
    if (sigma.rows() == 2) {
        const double s11 = sigma(0, 0), s22 = sigma(1, 1);
        row.r = sigma(0, 1) / std::sqrt(s11 * s22);
        row.r_sigma4 = row.r * row.sigma2 * row.sigma2;
    } else {
        row.r = kNaN;
        row.r_sigma4 = kNaN;
    }
    row.energy = c.hbar * c.hbar / (2.0 * c.mass * row.sigma2);
    return row;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Relative residual of the interpolant derivative against the vector field.
double relative_residual(const Eigen::VectorXd& ydot, const Eigen::VectorXd& f) {
    const double scale = f.cwiseAbs().maxCoeff();
    const double diff = (ydot - f).cwiseAbs().maxCoeff();
    if (scale <= 1e-300)
        return diff;
    return diff / scale;
}

} // namespace

std::string to_string(Regime r) {
    switch (r) {
    case Regime::vacuum: return "vacuum";
    case Regime::friction: return "friction";
    case Regime::overdamped: return "overdamped";
    case Regime::thermo: return "thermo";
    case Regime::classical: return "classical";
    }
    return "unknown";
}

std::string to_string(InvariantKind k) {
    switch (k) {
    case InvariantKind::vacuum_spreading: return "vacuum_spreading";
    case InvariantKind::r_sigma4: return "r_sigma4";
    case InvariantKind::off_diagonal: return "off_diagonal";
    }
    return "unknown";
}

Eigen::MatrixXd eq_covariance_acceleration(const Eigen::MatrixXd& sigma,
                                           const Eigen::MatrixXd& sigma_dot,
                                           const PhysConsts& c, double t) {
    const Eigen::MatrixXd s = symmetrized(sigma);
    const Eigen::MatrixXd v = symmetrized(sigma_dot);
    const Eigen::MatrixXd sinv = spd_inverse_or_throw(s, t);
    const double hm = c.hbar / c.mass;
    Eigen::MatrixXd acc = 0.5 * v * sinv * v - c.gamma * v + 0.5 * hm * hm * sinv;
    return symmetrized(acc);
}

Eigen::MatrixXd thermo_moment_rate(const Eigen::MatrixXd& sigma, const PhysConsts& c,
                                   double t) {
    if (!(c.gamma > 0.0))
        throw DomainError("thermo_moment_rate: gamma must be > 0");
    const auto d = sigma.rows();
    Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(d, d);
    if (c.hbar > 0.0) {
        const double q = c.hbar * c.hbar / (2.0 * c.mass * c.mass * c.gamma);
        rate += q * spd_inverse_or_throw(symmetrized(sigma), t);
    }
    rate.diagonal().array() += 2.0 * c.kbt / (c.mass * c.gamma);
    return rate;
}

double ermakov_acceleration(double sigma, double sigma_dot, const PhysConsts& c) {
    if (!(sigma > 0.0))
        throw DomainError("ermakov_acceleration: sigma must be > 0");
    const double q = c.hbar / (2.0 * c.mass);
    return -c.gamma * sigma_dot + q * q / (sigma * sigma * sigma);
}

namespace {

void check_grid_start(std::span<const double> grid, double t0) {
    if (grid.empty())
        throw DomainError("integration grid is empty");
    if (std::abs(grid.front() - t0) > 1e-12 * std::max(1.0, std::abs(t0)))
        throw DomainError("integration grid must start at the initial state's time");
}

// Shared machinery: integrates a matrix-valued field and fills a Trajectory.
// `order2` selects the (Sigma, Sigma') system over the first-order one.
Trajectory integrate_matrix_system(const CovMatrix& sigma0, const Eigen::MatrixXd& sigma_dot0,
                                   bool order2, const PhysConsts& c,
                                   std::span<const double> grid, const SolverConfig& cfg,
                                   Regime regime) {
    cfg.validate();
    c.validate();

    const auto d = sigma0.dim();
    const auto n = d * d;
    const double t0 = grid.front();

    Trajectory traj;
    traj.regime = regime;
    traj.consts = c;
    const std::size_t m = grid.size();
    traj.times.assign(grid.begin(), grid.end());
    traj.states.reserve(m);
    traj.sigma2.resize(m);
    traj.r.resize(m);
    traj.r_sigma4.resize(m);
    traj.energy.resize(m);
    traj.momentum_cov_residual.assign(m, kNaN);
    traj.ode_residual.resize(m);

    // Free-particle consistency: Sigma(t) = Sigma0 + (t/m)^2 <pp> with the
    // conserved momentum covariance <pp> = hbar^2 Sigma0^{-1} / 4.
    const bool vacuum = order2 && c.gamma == 0.0 && c.hbar > 0.0;
    Eigen::MatrixXd growth; // <pp> / m^2
    if (vacuum) {
        const double f = c.hbar * c.hbar / (4.0 * c.mass * c.mass);
        growth = f * spd_inverse_or_throw(sigma0.entries(), t0);
    }

    ode::Rhs rhs;
    if (order2) {
        rhs = [d, n, &c](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
            Eigen::Map<const Eigen::MatrixXd> s(y.data(), d, d);
            Eigen::Map<const Eigen::MatrixXd> v(y.data() + n, d, d);
            dy.resize(y.size());
            Eigen::Map<Eigen::MatrixXd>(dy.data(), d, d) = v;
            Eigen::Map<Eigen::MatrixXd>(dy.data() + n, d, d) =
                eq_covariance_acceleration(s, v, c, t);
        };
    } else {
        rhs = [d, &c](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
            Eigen::Map<const Eigen::MatrixXd> s(y.data(), d, d);
            dy.resize(y.size());
            Eigen::Map<Eigen::MatrixXd>(dy.data(), d, d) = thermo_moment_rate(s, c, t);
        };
    }

    double max_sym_defect = 0.0;
    ode::PostStepFn post = [&](double t, Eigen::VectorXd& y) {
        Eigen::Map<Eigen::MatrixXd> s(y.data(), d, d);
        max_sym_defect = std::max(max_sym_defect, max_abs(s - s.transpose()));
        s = symmetrized(s).eval();
        if (order2) {
            Eigen::Map<Eigen::MatrixXd> v(y.data() + n, d, d);
            max_sym_defect = std::max(max_sym_defect, max_abs(v - v.transpose()));
            v = symmetrized(v).eval();
        }
        if (cfg.spd_check_every_step) {
            Eigen::MatrixXd shifted = s;
            shifted.diagonal().array() -= cfg.spd_tol * s.diagonal().maxCoeff();
            Eigen::LLT<Eigen::MatrixXd> llt(shifted);
            if (llt.info() != Eigen::Success)
                throw SpdLostError("covariance lost positive definiteness", t);
        }
    };

    Eigen::VectorXd f_at(order2 ? 2 * n : n);
    ode::OutputFn on_output = [&](std::size_t idx, double t, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& ydot) {
        Eigen::MatrixXd s = symmetrized(Eigen::Map<const Eigen::MatrixXd>(y.data(), d, d));
        Eigen::MatrixXd v = order2
                                ? symmetrized(Eigen::Map<const Eigen::MatrixXd>(y.data() + n, d, d))
                                : Eigen::MatrixXd(thermo_moment_rate(s, c, t));

        CovMatrix cov = [&] {
            try {
                return validate_spd(s, cfg.spd_tol);
            } catch (const NotPositiveDefiniteError&) {
                throw SpdLostError("output state lost positive definiteness", t);
            }
        }();

        const auto row = observables_of(s, c);
        traj.sigma2[idx] = row.sigma2;
        traj.r[idx] = row.r;
        traj.r_sigma4[idx] = row.r_sigma4;
        traj.energy[idx] = row.energy;
        if (vacuum) {
            const Eigen::MatrixXd expected =
                sigma0.entries() + (t - t0) * (t - t0) * growth;
            traj.momentum_cov_residual[idx] = max_abs(s - expected) / max_abs(expected);
        }
        rhs(t, y, f_at);
        traj.ode_residual[idx] = relative_residual(ydot, f_at);
        traj.stats.max_ode_residual =
            std::max(traj.stats.max_ode_residual, traj.ode_residual[idx]);

        traj.states.emplace_back(std::move(cov), std::move(v), t);
    };

    Eigen::VectorXd y0;
    if (order2)
        pack(sigma0.entries(), sigma_dot0, y0);
    else {
        y0.resize(n);
        Eigen::Map<Eigen::MatrixXd>(y0.data(), d, d) = sigma0.entries();
    }

    const auto st = ode::integrate_dp54(rhs, t0, std::move(y0), grid, cfg.stepper(),
                                        on_output, post);
    traj.stats.n_accepted = st.n_accepted;
    traj.stats.n_rejected = st.n_rejected;
    traj.stats.n_rhs = st.n_rhs;
    traj.stats.max_sym_defect = max_sym_defect;
    return traj;
}

} // namespace

Trajectory integrate_eq_covariance(const GaussianState& s0, const PhysConsts& c,
                                   std::span<const double> grid, const SolverConfig& cfg) {
    check_grid_start(grid, s0.t());
    const Regime regime = c.gamma == 0.0 ? Regime::vacuum : Regime::friction;
    return integrate_matrix_system(s0.sigma(), s0.sigma_dot(), true, c, grid, cfg, regime);
}

Trajectory integrate_thermo_moments(const CovMatrix& sigma0, const PhysConsts& c,
                                    std::span<const double> grid, const SolverConfig& cfg) {
    c.validate();
    c.require_gamma();
    if (grid.empty())
        throw DomainError("integration grid is empty");
    const Regime regime = c.kbt == 0.0
                              ? Regime::overdamped
                              : (c.hbar == 0.0 ? Regime::classical : Regime::thermo);
    return integrate_matrix_system(sigma0, Eigen::MatrixXd(), false, c, grid, cfg, regime);
}

ScalarTrajectory integrate_ermakov(double sigma0, double sigma_dot0, const PhysConsts& c,
                                   std::span<const double> grid, const SolverConfig& cfg) {
    cfg.validate();
    c.validate();
    if (!(sigma0 > 0.0))
        throw DomainError("integrate_ermakov: sigma0 must be > 0");
    if (grid.empty())
        throw DomainError("integration grid is empty");

    ode::Rhs rhs = [&c](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(2);
        if (!(y[0] > 0.0))
            throw SingularSigmaError("ermakov: sigma reached zero", t);
        dy[0] = y[1];
        dy[1] = ermakov_acceleration(y[0], y[1], c);
    };

    ScalarTrajectory traj;
    const std::size_t m = grid.size();
    traj.times.assign(grid.begin(), grid.end());
    traj.sigma.resize(m);
    traj.sigma_dot.resize(m);

    Eigen::VectorXd y0(2);
    y0 << sigma0, sigma_dot0;
    ode::OutputFn on_output = [&](std::size_t idx, double /*t*/, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd&) {
        traj.sigma[idx] = y[0];
        traj.sigma_dot[idx] = y[1];
    };

    const auto st =
        ode::integrate_dp54(rhs, grid.front(), std::move(y0), grid, cfg.stepper(), on_output);
    traj.stats.n_accepted = st.n_accepted;
    traj.stats.n_rejected = st.n_rejected;
    traj.stats.n_rhs = st.n_rhs;
    return traj;
}

namespace {

double default_tolerance(InvariantKind kind) {
    switch (kind) {
    case InvariantKind::vacuum_spreading: return 1e-7;
    case InvariantKind::r_sigma4: return 1e-7;
    case InvariantKind::off_diagonal: return 1e-10;
    }
    return 1e-7;
}

} // namespace

InvariantReport monitor_invariants(const Trajectory& traj, const PhysConsts& c,
                                   InvariantKind kind, double tolerance) {
    InvariantReport report;
    report.kind = kind;
    report.tolerance = tolerance;
    report.drift.resize(traj.size(), 0.0);
    if (traj.size() == 0)
        return report;

    const Eigen::MatrixXd& s0 = traj.states.front().sigma().entries();

    switch (kind) {
    case InvariantKind::vacuum_spreading: {
        const CovMatrix& c0 = traj.states.front().sigma();
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const auto expected =
                analytic::vacuum_covariance(c0, traj.times[k] - traj.times.front(), c);
            report.drift[k] = max_abs(traj.states[k].sigma().entries() - expected.entries()) /
                              max_abs(expected.entries());
        }
        break;
    }
    case InvariantKind::r_sigma4: {
        if (traj.states.front().dim() != 2)
            throw DomainError("r_sigma4 invariant requires a 2x2 pair trajectory");
        const double ref = traj.r_sigma4.front();
        const double s04 = traj.sigma2.front() * traj.sigma2.front();
        const double denom = std::max(std::abs(ref), 1e-300);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const double d = std::abs(traj.r_sigma4[k] - ref);
            report.drift[k] = ref != 0.0 ? d / denom : d / s04;
        }
        break;
    }
    case InvariantKind::off_diagonal: {
        const double scale = max_abs(s0);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            Eigen::MatrixXd diff = traj.states[k].sigma().entries() - s0;
            diff.diagonal().setZero();
            report.drift[k] = max_abs(diff) / scale;
        }
        break;
    }
    }

    for (std::size_t k = 0; k < traj.size(); ++k) {
        report.max_drift = std::max(report.max_drift, report.drift[k]);
        if (!report.first_exceeding && report.drift[k] > tolerance)
            report.first_exceeding = traj.times[k];
    }
    return report;
}

InvariantReport monitor_invariants(const Trajectory& traj, const PhysConsts& c) {
    InvariantKind kind;
    switch (traj.regime) {
    case Regime::vacuum: kind = InvariantKind::vacuum_spreading; break;
    case Regime::overdamped: kind = InvariantKind::r_sigma4; break;
    case Regime::thermo:
        if (traj.consts.kbt == 0.0) {
            kind = InvariantKind::r_sigma4;
        } else {
            throw DomainError("no invariant defined for the thermo regime at kbt > 0");
        }
        break;
    case Regime::classical: kind = InvariantKind::off_diagonal; break;
    case Regime::friction:
        throw DomainError("no invariant defined for the friction regime");
    default:
        throw DomainError("unknown regime");
    }
    return monitor_invariants(traj, c, kind, default_tolerance(kind));
}

} // namespace qcorr::dynamics
