#include "qcorr/cov_matrix.hpp"
#include "qcorr/gaussian_state.hpp"
#include "qcorr/phys_consts.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace qcorr;

TEST_CASE("pair_covariance produces the stated 2x2 pattern") {
    const auto id = pair_covariance({1.0, 0.0});
    CHECK(id.entries().isApprox(Eigen::MatrixXd::Identity(2, 2)));

    const auto m = pair_covariance({2.0, 0.5});
    CHECK(m(0, 0) == 2.0);
    CHECK(m(1, 1) == 2.0);
    CHECK(m(0, 1) == 1.0);
    CHECK(m(1, 0) == 1.0);
}

TEST_CASE("pair_covariance near-singular correlation stays valid") {
    // Eigenvalues of the pattern are sigma2 (1 +- r); checked against a
    // generic eigensolver rather than the formula being tested.
    const auto m = pair_covariance({1.0, 0.999999});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.entries());
    CHECK(es.eigenvalues().minCoeff() == doctest::Approx(1e-6).epsilon(1e-9));
    CHECK(m.min_eigenvalue() == doctest::Approx(1e-6).epsilon(1e-9));
}

TEST_CASE("pair_covariance rejects invalid stats") {
    CHECK_THROWS_AS(pair_covariance({1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(pair_covariance({1.0, -1.2}), DomainError);
    CHECK_THROWS_AS(pair_covariance({0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(pair_covariance({-2.0, 0.0}), DomainError);
}

TEST_CASE("extract_pair_stats inverts pair_covariance") {
    const auto p = extract_pair_stats(pair_covariance({2.0, 0.5}));
    CHECK(p.sigma2 == doctest::Approx(2.0));
    CHECK(p.r == doctest::Approx(0.5));

    const auto q = extract_pair_stats(CovMatrix::identity(2));
    CHECK(q.sigma2 == 1.0);
    CHECK(q.r == 0.0);
}

TEST_CASE("extract_pair_stats on unequal diagonals uses the arithmetic mean") {
    Eigen::MatrixXd m(2, 2);
    m << 4.0, 1.0, 1.0, 1.0;
    const auto p = extract_pair_stats(validate_spd(m));
    CHECK(p.sigma2 == doctest::Approx(2.5));
    CHECK(p.r == doctest::Approx(0.5));

    // Strict mode rejects the same input.
    CHECK_THROWS_AS(extract_pair_stats(validate_spd(m), 1e-9), DomainError);
    // ... but accepts symmetric-diagonal matrices.
    CHECK_NOTHROW(extract_pair_stats(pair_covariance({1.0, 0.3}), 1e-9));
}

TEST_CASE("extract_pair_stats rejects non-2x2 input") {
    CHECK_THROWS_AS(extract_pair_stats(CovMatrix::identity(3)), DomainError);
}

TEST_CASE("validate_spd accepts SPD and rejects indefinite matrices") {
    CHECK_NOTHROW(validate_spd(Eigen::MatrixXd::Identity(2, 2), 1e-12));

    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    // Eigenvalues 3 and -1, confirmed independently.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bad);
    CHECK(es.eigenvalues().minCoeff() == doctest::Approx(-1.0));
    CHECK_THROWS_AS(validate_spd(bad), NotPositiveDefiniteError);
}

TEST_CASE("validate_spd symmetrizes tiny asymmetry and rejects large") {
    Eigen::MatrixXd near_sym(2, 2);
    near_sym << 1.0, 1e-15, 0.0, 1.0;
    const auto m = validate_spd(near_sym);
    CHECK(m(0, 1) == m(1, 0));

    Eigen::MatrixXd skew(2, 2);
    skew << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(validate_spd(skew), NotSymmetricError);
}

TEST_CASE("validate_spd rejects non-finite and non-square input") {
    Eigen::MatrixXd nan2(2, 2);
    nan2 << 1.0, 0.0, 0.0, std::nan("");
    CHECK_THROWS_AS(validate_spd(nan2), DomainError);
    CHECK_THROWS_AS(validate_spd(Eigen::MatrixXd::Ones(2, 3)), DomainError);
}

TEST_CASE("validate_spd is idempotent") {
    std::mt19937_64 rng(81001);
    for (int i = 0; i < 50; ++i) {
        const auto m = test::random_spd(1 + i % 6, rng);
        const auto again = validate_spd(m.entries());
        CHECK(again.entries() == m.entries());
    }
}

TEST_CASE("pair round-trip is exact to a few ulp") {
    std::mt19937_64 rng(81002);
    for (int i = 0; i < 1000; ++i) {
        const auto p = test::random_pair(rng, 0.999);
        const auto back = extract_pair_stats(pair_covariance(p));
        CHECK(test::ulp_diff(back.sigma2, p.sigma2) <= 4.0);
        if (p.r != 0.0)
            CHECK(test::ulp_diff(back.r, p.r) <= 4.0);
    }
}

TEST_CASE("pair_covariance eigenvalues are sigma2 (1 +- r)") {
    std::mt19937_64 rng(81003);
    for (int i = 0; i < 1000; ++i) {
        const auto p = test::random_pair(rng, 0.99);
        const auto m = pair_covariance(p);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.entries());
        const double lo = p.sigma2 * (1.0 - std::abs(p.r));
        const double hi = p.sigma2 * (1.0 + std::abs(p.r));
        CHECK(test::rel_diff(es.eigenvalues().minCoeff(), lo) < 1e-12);
        CHECK(test::rel_diff(es.eigenvalues().maxCoeff(), hi) < 1e-12);
    }
}

TEST_CASE("PhysConsts validation") {
    CHECK_NOTHROW(PhysConsts::natural_units().validate());
    CHECK_THROWS_AS((PhysConsts{1.0, 0.0, 0.0, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS((PhysConsts{-1.0, 1.0, 0.0, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS((PhysConsts{1.0, 1.0, -0.5, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS((PhysConsts{1.0, 1.0, 0.0, -0.5}.validate()), DomainError);

    const PhysConsts c{1.0, 2.0, 4.0, 3.0};
    CHECK(c.diffusion() == doctest::Approx(3.0 / 8.0));
    CHECK_THROWS_AS((PhysConsts{1.0, 1.0, 0.0, 1.0}.diffusion()), DomainError);
}

TEST_CASE("GaussianState validates sigma_dot") {
    auto sigma = pair_covariance({1.0, 0.5});
    CHECK_NOTHROW(GaussianState::at_rest(sigma));

    Eigen::MatrixXd skew(2, 2);
    skew << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(GaussianState(sigma, skew), NotSymmetricError);
    CHECK_THROWS_AS(GaussianState(sigma, Eigen::MatrixXd::Zero(3, 3)), DomainError);

    const GaussianState s(sigma, Eigen::MatrixXd::Constant(2, 2, 0.25), 1.5);
    CHECK(s.t() == 1.5);
    CHECK(s.sigma_dot()(0, 1) == 0.25);
}
