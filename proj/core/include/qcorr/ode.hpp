#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>

namespace qcorr::ode {

struct StepperOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 0.0;     ///< 0 = unbounded
    double min_step = 0.0;     ///< 0 = roundoff-limited
    double initial_step = 0.0; ///< 0 = automatic
};

struct StepperStats {
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;
    std::size_t n_rhs = 0;
};

/// Right-hand side dy/dt = f(t, y, dydt). A SingularSigmaError thrown from
/// a trial stage rejects the step (the controller retries with a smaller
/// one); only a failure at an accepted state propagates.
using Rhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Receives each requested output point, in grid order. `ydot` is the
/// derivative of the dense-output interpolant at that time (equals f(t, y)
/// exactly at step endpoints, to interpolation order inside a step).
using OutputFn =
    std::function<void(std::size_t, double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Applied in place to every accepted state (e.g. symmetrization / SPD
/// checks); may throw to abort the integration.
using PostStepFn = std::function<void(double, Eigen::VectorXd&)>;

/// Adaptive Dormand-Prince 5(4) with PI step control and fourth-order
/// dense output. Output times must be non-decreasing and start at t0; the
/// step sequence never depends on the output grid, so values at shared
/// grid points are identical across different grids.
StepperStats integrate_dp54(const Rhs& f, double t0, Eigen::VectorXd y0,
                            std::span<const double> output_times, const StepperOptions& opt,
                            const OutputFn& on_output, const PostStepFn& post_step = {});

/// Fixed-step classical RK4; the independent cross-check path, not the
/// main one.
Eigen::VectorXd integrate_rk4(const Rhs& f, double t0, Eigen::VectorXd y0, double t_end,
                              std::size_t n_steps);

} // namespace qcorr::ode
