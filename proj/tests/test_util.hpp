#pragma once

#include "qcorr/cov_matrix.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace qcorr::test {

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

inline double rel_matrix_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return scale > 0.0 ? (a - b).cwiseAbs().maxCoeff() / scale : 0.0;
}

/// |a - b| measured in units of the last place of the larger magnitude.
inline double ulp_diff(double a, double b) {
    if (a == b)
        return 0.0;
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) / (scale * std::numeric_limits<double>::epsilon());
}

inline Eigen::MatrixXd random_spd_matrix(Eigen::Index d, std::mt19937_64& rng,
                                         double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            a(i, j) = normal(rng);
    Eigen::MatrixXd m = a * a.transpose() / static_cast<double>(d);
    m.diagonal().array() += 0.2;
    return scale * m;
}

inline CovMatrix random_spd(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
    return validate_spd(random_spd_matrix(d, rng, scale));
}

inline PairStats random_pair(std::mt19937_64& rng, double max_abs_r = 0.95) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double sigma2 = std::pow(10.0, -1.0 + 2.0 * u(rng)); // [0.1, 10)
    const double r = max_abs_r * (2.0 * u(rng) - 1.0);
    return {sigma2, r};
}

} // namespace qcorr::test
