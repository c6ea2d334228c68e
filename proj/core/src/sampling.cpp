#include "qcorr/sampling.hpp"

#include <Eigen/Cholesky>

namespace qcorr {

GaussianSampler::GaussianSampler(const CovMatrix& sigma, std::uint64_t seed) : rng_(seed) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma.entries());
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError("GaussianSampler: Cholesky factorization failed");
    chol_ = llt.matrixL();
}

Eigen::VectorXd GaussianSampler::draw() {
    Eigen::VectorXd z(chol_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z[i] = normal_(rng_);
    return chol_ * z;
}

} // namespace qcorr
