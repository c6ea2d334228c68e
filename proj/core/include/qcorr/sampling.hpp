#pragma once

#include "qcorr/cov_matrix.hpp"

#include <cstdint>
#include <random>

namespace qcorr {

/// Seeded sampler of the zero-mean Gaussian with a given covariance.
/// Generator: std::mt19937_64 driving std::normal_distribution, transformed
/// by the Cholesky factor of Sigma. Independent streams are obtained by
/// distinct seeds; merged estimates are plain sums, so the merge order does
/// not matter.
class GaussianSampler {
public:
    GaussianSampler(const CovMatrix& sigma, std::uint64_t seed);

    Eigen::VectorXd draw();

    Eigen::Index dim() const noexcept { return chol_.rows(); }

private:
    Eigen::MatrixXd chol_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Mean and standard error of a scalar sample stream.
struct MeanWithError {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Online accumulator for Monte Carlo means (Welford).
class MeanAccumulator {
public:
    void add(double x) noexcept {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    MeanWithError result() const noexcept {
        const auto n = static_cast<double>(n_);
        const double var = n_ > 1 ? m2_ / (n - 1.0) : 0.0;
        return {mean_, n_ > 0 ? std::sqrt(var / n) : 0.0, n_};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

} // namespace qcorr
