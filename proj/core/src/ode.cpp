#include "qcorr/ode.hpp"

#include "qcorr/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace qcorr::ode {

namespace {

// Dormand-Prince 5(4) coefficients. b equals the last row of a (FSAL), e is
// the difference between the fifth- and fourth-order weights.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;

constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// Dense-output weights (the classical fourth-order interpolant).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

// PI step controller constants.
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kFacMax = 5.0; // max growth per step
constexpr double kFacMin = 0.2; // max shrink per step

struct DenseSegment {
    double t0 = 0.0, h = 0.0;
    std::array<Eigen::VectorXd, 5> cont;

    void build(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, const Eigen::VectorXd& k1,
               const Eigen::VectorXd& k3, const Eigen::VectorXd& k4, const Eigen::VectorXd& k5,
               const Eigen::VectorXd& k6, const Eigen::VectorXd& k7, double t0_, double h_) {
        t0 = t0_;
        h = h_;
        cont[0] = y0;
        cont[1] = y1 - y0;
        cont[2] = h * k1 - cont[1];
        cont[3] = cont[1] - h * k7 - cont[2];
        cont[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    }

    void value(double t, Eigen::VectorXd& out) const {
        const double th = (t - t0) / h, th1 = 1.0 - th;
        out = cont[0] + th * (cont[1] + th1 * (cont[2] + th * (cont[3] + th1 * cont[4])));
    }

    void derivative(double t, Eigen::VectorXd& out) const {
        const double th = (t - t0) / h, th1 = 1.0 - th;
        out = (cont[1] + (1.0 - 2.0 * th) * cont[2] + th * (2.0 - 3.0 * th) * cont[3] +
               2.0 * th * th1 * (1.0 - 2.0 * th) * cont[4]) /
              h;
    }
};

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, double abs_tol, double rel_tol) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = err[i] / sc;
        sum += q * q;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

// Initial step heuristic following the usual hinit construction.
double initial_step(const Rhs& f, double t0, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& f0, double direction_span, double abs_tol,
                    double rel_tol, StepperStats& stats) {
    double dnf = 0.0, dny = 0.0;
    for (Eigen::Index i = 0; i < y0.size(); ++i) {
        const double sc = abs_tol + rel_tol * std::abs(y0[i]);
        dnf += std::pow(f0[i] / sc, 2);
        dny += std::pow(y0[i] / sc, 2);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h = std::min(h, direction_span);

    Eigen::VectorXd y1 = y0 + h * f0;
    Eigen::VectorXd f1(y0.size());
    f(t0 + h, y1, f1);
    ++stats.n_rhs;

    double der2 = 0.0;
    for (Eigen::Index i = 0; i < y0.size(); ++i) {
        const double sc = abs_tol + rel_tol * std::abs(y0[i]);
        der2 += std::pow((f1[i] - f0[i]) / sc, 2);
    }
    der2 = std::sqrt(der2) / h;

    const double der12 = std::max(der2, std::sqrt(dnf));
    const double h1 = (der12 <= 1e-15) ? std::max(1e-6, h * 1e-3)
                                       : std::pow(0.01 / der12, 1.0 / 5.0);
    return std::min({100.0 * h, h1, direction_span});
}

} // namespace

StepperStats integrate_dp54(const Rhs& f, double t0, Eigen::VectorXd y,
                            std::span<const double> output_times, const StepperOptions& opt,
                            const OutputFn& on_output, const PostStepFn& post_step) {
    if (output_times.empty())
        throw DomainError("integrate_dp54: empty output grid");
    for (std::size_t i = 1; i < output_times.size(); ++i)
        if (!(output_times[i] > output_times[i - 1]))
            throw DomainError("integrate_dp54: output times must be strictly increasing");
    if (std::abs(output_times.front() - t0) >
        1e-12 * std::max(1.0, std::abs(t0)))
        throw DomainError("integrate_dp54: grid must start at the initial time");

    const double t_end = output_times.back();
    const Eigen::Index n = y.size();
    StepperStats stats;

    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    Eigen::VectorXd ytmp(n), ynew(n), yerr(n), ydot_out(n), y_out(n);

    f(t0, y, k1);
    ++stats.n_rhs;

    // First grid point is the initial state.
    std::size_t next_out = 0;
    on_output(next_out, t0, y, k1);
    ++next_out;
    if (next_out == output_times.size())
        return stats;

    const double span = t_end - t0;
    if (!(span > 0.0))
        throw DomainError("integrate_dp54: grid must extend past the initial time");

    double h = opt.initial_step > 0.0
                   ? opt.initial_step
                   : initial_step(f, t0, y, k1, span, opt.abs_tol, opt.rel_tol, stats);
    if (opt.max_step > 0.0)
        h = std::min(h, opt.max_step);

    double t = t0;
    double facold = 1e-4;
    DenseSegment seg;

    const double uround = std::numeric_limits<double>::epsilon();

    while (t < t_end) {
        const double h_floor = std::max(opt.min_step, 16.0 * uround * std::max(std::abs(t), 1.0));
        if (h < h_floor)
            throw StepSizeUnderflowError("integrate_dp54: step size underflow", t);

        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }

        // Trial step; a singular covariance inside a stage rejects it.
        bool stage_failed = false;
        try {
            ytmp = y + h * (a21 * k1);
            f(t + c2 * h, ytmp, k2);
            ytmp = y + h * (a31 * k1 + a32 * k2);
            f(t + c3 * h, ytmp, k3);
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            f(t + c4 * h, ytmp, k4);
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            f(t + c5 * h, ytmp, k5);
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            f(t + h, ytmp, k6);
            ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            f(t + h, ynew, k7);
            stats.n_rhs += 6;
        } catch (const SingularSigmaError&) {
            stage_failed = true;
        }

        double err = std::numeric_limits<double>::infinity();
        if (!stage_failed) {
            yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            err = error_norm(yerr, y, ynew, opt.abs_tol, opt.rel_tol);
            if (!std::isfinite(err))
                err = std::numeric_limits<double>::infinity();
        }

        if (err > 1.0) {
            // Rejected: shrink and retry.
            ++stats.n_rejected;
            double fac11 =
                std::isfinite(err) ? std::pow(err, kExpo) : 1.0 / kFacMin;
            h /= std::min(1.0 / kFacMin, fac11 / kSafe);
            continue;
        }

        // Accepted.
        ++stats.n_accepted;
        const double t_new = t + h;

        if (post_step)
            post_step(t_new, ynew);

        seg.build(y, ynew, k1, k3, k4, k5, k6, k7, t, h);
        while (next_out < output_times.size() && output_times[next_out] <= t_new + 1e-14 * std::max(1.0, std::abs(t_new))) {
            const double tg = output_times[next_out];
            if (next_out + 1 == output_times.size() && last) {
                seg.derivative(tg, ydot_out);
                on_output(next_out, tg, ynew, ydot_out);
            } else if (tg >= t_new) {
                seg.derivative(tg, ydot_out);
                on_output(next_out, tg, ynew, ydot_out);
            } else {
                seg.value(tg, y_out);
                seg.derivative(tg, ydot_out);
                on_output(next_out, tg, y_out, ydot_out);
            }
            ++next_out;
        }

        t = t_new;
        y.swap(ynew);
        k1.swap(k7); // FSAL

        const double fac11 = std::pow(std::max(err, 1e-10), kExpo);
        double fac = fac11 / std::pow(facold, kBeta);
        fac = std::max(1.0 / kFacMax, std::min(1.0 / kFacMin, fac / kSafe));
        h = h / fac;
        if (opt.max_step > 0.0)
            h = std::min(h, opt.max_step);
        facold = std::max(err, 1e-4);

        if (next_out == output_times.size())
            break;
    }

    return stats;
}

Eigen::VectorXd integrate_rk4(const Rhs& f, double t0, Eigen::VectorXd y, double t_end,
                              std::size_t n_steps) {
    if (n_steps == 0)
        throw DomainError("integrate_rk4: n_steps must be positive");
    const double h = (t_end - t0) / static_cast<double>(n_steps);
    const Eigen::Index n = y.size();
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), ytmp(n);
    double t = t0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        f(t, y, k1);
        ytmp = y + 0.5 * h * k1;
        f(t + 0.5 * h, ytmp, k2);
        ytmp = y + 0.5 * h * k2;
        f(t + 0.5 * h, ytmp, k3);
        ytmp = y + h * k3;
        f(t + h, ytmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t0 + static_cast<double>(i + 1) * h;
    }
    return y;
}

} // namespace qcorr::ode
