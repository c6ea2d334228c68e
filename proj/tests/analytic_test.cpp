#include "qcorr/analytic.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace qcorr;
using namespace qcorr::analytic;

namespace {
const PhysConsts kNat = PhysConsts::natural_units();
}

TEST_CASE("vacuum_covariance closed form") {
    const auto s0 = CovMatrix::identity(2);
    CHECK(vacuum_covariance(s0, 0.0, kNat).entries() == s0.entries());
    CHECK(test::rel_matrix_diff(vacuum_covariance(s0, 2.0, kNat).entries(),
                                2.0 * Eigen::MatrixXd::Identity(2, 2)) < 1e-15);

    // Correlated pair at the decorrelation time: dispersion doubles, the
    // correlation passes through zero.
    const PairStats p0{1.0, 0.5};
    const double t1 = tau1(p0, kNat);
    CHECK(t1 == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    const auto p = extract_pair_stats(vacuum_covariance(pair_covariance(p0), t1, kNat));
    CHECK(p.sigma2 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(p.r) < 1e-12);
}

TEST_CASE("momentum_covariance is hbar^2 Sigma0^{-1} / 4") {
    CHECK(test::rel_matrix_diff(momentum_covariance(CovMatrix::identity(2), kNat),
                                0.25 * Eigen::MatrixXd::Identity(2, 2)) < 1e-15);

    // Pair case: invert the 2x2 pattern directly as the oracle. The
    // off-diagonal flips sign: position correlation is momentum
    // anticorrelation.
    const PairStats p0{1.0, 0.5};
    Eigen::MatrixXd inv(2, 2);
    const double det = p0.sigma2 * p0.sigma2 * (1.0 - p0.r * p0.r);
    inv << p0.sigma2 / det, -p0.r * p0.sigma2 / det, -p0.r * p0.sigma2 / det,
        p0.sigma2 / det;
    const auto pp = momentum_covariance(pair_covariance(p0), kNat);
    CHECK(test::rel_matrix_diff(pp, 0.25 * inv) < 1e-14);
    CHECK(pp(0, 1) < 0.0);
    CHECK(pp(0, 1) == doctest::Approx(-1.0 / 6.0).epsilon(1e-12));

    PhysConsts doubled = kNat;
    doubled.hbar = 2.0;
    CHECK(test::rel_matrix_diff(momentum_covariance(pair_covariance(p0), doubled), 4.0 * pp) <
          1e-14);
}

TEST_CASE("vacuum_pair matches the pair formulas") {
    const PairStats p0{1.3, 0.4};
    const auto at0 = vacuum_pair(p0, 0.0, kNat);
    CHECK(at0.sigma2 == p0.sigma2);
    CHECK(at0.r == p0.r);

    // Uncorrelated particles stay uncorrelated.
    for (double t : {0.1, 1.0, 7.5})
        CHECK(vacuum_pair({1.0, 0.0}, t, kNat).r == 0.0);

    // Long-time limit of the correlation is the sign-flipped initial one.
    const double t1 = tau1(p0, kNat);
    const auto late = vacuum_pair(p0, 100.0 * t1, kNat);
    CHECK(std::abs(late.r - (-p0.r)) < 2e-4);
}

TEST_CASE("tau1 formula and postcondition") {
    CHECK(tau1({1.0, 0.0}, kNat) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(tau1({1.0, 0.5}, kNat) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(tau1({1.0, 0.999999}, kNat) < 3e-3);
    CHECK_THROWS_AS(tau1({1.0, 1.0}, kNat), DomainError);

    std::mt19937_64 rng(82001);
    for (int i = 0; i < 200; ++i) {
        const auto p0 = test::random_pair(rng);
        CHECK(std::abs(vacuum_pair(p0, tau1(p0, kNat), kNat).r) < 1e-12);
    }
}

TEST_CASE("overdamped_covariance square law") {
    PhysConsts c = kNat;
    c.gamma = 1.0;
    const auto s0 = CovMatrix::identity(2);
    CHECK(test::rel_matrix_diff(overdamped_covariance(s0, 0.0, c).entries(), s0.entries()) <
          1e-14);
    CHECK(test::rel_matrix_diff(overdamped_covariance(s0, 3.0, c).entries(),
                                2.0 * Eigen::MatrixXd::Identity(2, 2)) < 1e-14);
    CHECK_THROWS_AS(overdamped_covariance(s0, 1.0, kNat), DomainError); // gamma = 0

    // r sigma^4 is conserved along the square-law flow.
    const PairStats p0{1.0, 0.6};
    const double ref = p0.r * p0.sigma2 * p0.sigma2;
    for (double t : {0.0, 0.3, 1.0, 5.0, 40.0}) {
        const auto p = extract_pair_stats(overdamped_covariance(pair_covariance(p0), t, c));
        CHECK(test::rel_diff(p.r * p.sigma2 * p.sigma2, ref) < 1e-12);
    }
}

TEST_CASE("overdamped_pair_r root selection and limits") {
    CHECK(overdamped_pair_r(0.7, 0.0, 2.0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(overdamped_pair_r(0.0, 5.0, 2.0) == 0.0);
    CHECK(std::abs(overdamped_pair_r(0.5, 1e7, 1.0)) < 2e-7); // r -> 0 at t >> tau2

    // Weak correlation: r/r0 = 1/(1 + t/tau2) within 1%.
    const double r = overdamped_pair_r(0.1, 1.0, 1.0);
    CHECK(std::abs(r - 0.05) / 0.05 < 0.01);

    // The returned root satisfies its quadratic and stays on the physical
    // branch: |r| <= |r0| with the initial sign.
    std::mt19937_64 rng(82002);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double r0 = 1.9 * (u(rng) - 0.5);
        if (std::abs(r0) >= 1.0)
            continue;
        const double t = std::pow(10.0, -3.0 + 6.0 * u(rng));
        const double tau = std::pow(10.0, -2.0 + 4.0 * u(rng));
        const double rr = overdamped_pair_r(r0, t, tau);
        const double a = 1.0 + r0 * r0 + t / tau;
        CHECK(std::abs(r0 * rr * rr - a * rr + r0) <= 1e-12);
        CHECK(std::abs(rr) <= std::abs(r0) + 1e-15);
        if (r0 != 0.0 && t > 0.0)
            CHECK(rr * r0 > 0.0);
    }
}

TEST_CASE("overdamped_pair matches the matrix path") {
    PhysConsts c = kNat;
    c.gamma = 1.0;
    const auto p = overdamped_pair({1.0, 0.0}, 3.0, c);
    CHECK(p.sigma2 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p.r == 0.0);

    std::mt19937_64 rng(82003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const auto p0 = test::random_pair(rng);
        PhysConsts cc = kNat;
        cc.gamma = std::pow(10.0, -1.0 + 3.0 * u(rng));
        const double t = std::pow(10.0, -2.0 + 4.0 * u(rng));
        const auto direct = overdamped_pair(p0, t, cc);
        const auto via_matrix =
            extract_pair_stats(overdamped_covariance(pair_covariance(p0), t, cc));
        CHECK(test::rel_diff(direct.sigma2, via_matrix.sigma2) < 1e-10);
        if (p0.r != 0.0)
            CHECK(test::rel_diff(direct.r, via_matrix.r) < 1e-10);

        // Conservation of r sigma^4 along the pair path.
        const double ref = p0.r * p0.sigma2 * p0.sigma2;
        if (p0.r != 0.0)
            CHECK(test::rel_diff(direct.r * direct.sigma2 * direct.sigma2, ref) < 1e-10);
    }
}

TEST_CASE("classical_covariance diffusion law") {
    PhysConsts c = kNat;
    c.gamma = 1.0;
    c.kbt = 1.0; // D = 1
    const auto s0 = pair_covariance({1.0, 0.5});
    CHECK(classical_covariance(s0, 0.0, c).entries() == s0.entries());

    const auto p = extract_pair_stats(classical_covariance(s0, 0.5, c));
    CHECK(p.sigma2 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(p.r == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(tau3({1.0, 0.5}, c) == doctest::Approx(0.5).epsilon(1e-15));

    // Off-diagonal entries never move; the decay law r/r0 = s0^2/s^2 =
    // 1/(1 + t/tau3) follows.
    for (double t : {0.1, 1.0, 10.0}) {
        const auto st = classical_covariance(s0, t, c);
        CHECK(st(0, 1) == s0(0, 1));
        const auto pt = extract_pair_stats(st);
        const double law = 1.0 / (1.0 + t / 0.5);
        CHECK(test::rel_diff(pt.r / 0.5, law) < 1e-14);
        CHECK(test::rel_diff(1.0 / pt.sigma2, law) < 1e-14);
    }

    PhysConsts no_kbt = c;
    no_kbt.kbt = 0.0;
    CHECK_THROWS_AS(classical_covariance(s0, 1.0, no_kbt), DomainError);
    PhysConsts no_gamma = c;
    no_gamma.gamma = 0.0;
    CHECK_THROWS_AS(classical_covariance(s0, 1.0, no_gamma), DomainError);
}

TEST_CASE("energy of a wavepacket") {
    CHECK(energy(1.0, kNat) == 0.5);
    CHECK(energy(2.0, kNat) == 0.25);
    CHECK_THROWS_AS(energy(0.0, kNat), DomainError);

    // With the long-time overdamped dispersion hbar sqrt(t/gamma)/m the
    // energy reduces to hbar gamma / (2 sqrt(gamma t)).
    PhysConsts c{0.7, 1.3, 2.5, 0.0};
    for (double t : {0.5, 3.0, 200.0}) {
        const double s2 = c.hbar * std::sqrt(t / c.gamma) / c.mass;
        const double expected = c.hbar * c.gamma / (2.0 * std::sqrt(c.gamma * t));
        CHECK(test::rel_diff(energy(s2, c), expected) < 1e-14);
    }
}

TEST_CASE("timescales bundle") {
    PhysConsts c = kNat;
    c.gamma = 2.0;
    const auto ts = timescales({1.0, 0.0}, c);
    CHECK(ts.tau1 == doctest::Approx(2.0));
    REQUIRE(ts.tau2.has_value());
    CHECK(*ts.tau2 == doctest::Approx(2.0));
    CHECK(*ts.tau2 == doctest::Approx(c.gamma * ts.tau1 * ts.tau1 / 4.0));
    CHECK_FALSE(ts.tau3.has_value());

    c.kbt = 1.0;
    const auto full = timescales({1.0, 0.0}, c);
    REQUIRE(full.tau3.has_value());
    CHECK(*full.tau3 == doctest::Approx(1.0));

    // tau2 scales with the fourth power of the initial width.
    CHECK(tau2({2.0, 0.0}, c) == doctest::Approx(4.0 * tau2({1.0, 0.0}, c)));

    PhysConsts free = kNat;
    const auto vac = timescales({1.0, 0.3}, free);
    CHECK_FALSE(vac.tau2.has_value());
    CHECK_FALSE(vac.tau3.has_value());
}

TEST_CASE("vacuum pair equals the matrix path for random inputs") {
    std::mt19937_64 rng(82004);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto p0 = test::random_pair(rng);
        const double t = std::pow(10.0, -2.0 + 4.0 * u(rng));
        const auto direct = vacuum_pair(p0, t, kNat);
        const auto via = extract_pair_stats(vacuum_covariance(pair_covariance(p0), t, kNat));
        CHECK(test::rel_diff(direct.sigma2, via.sigma2) < 1e-12);
        if (p0.r != 0.0)
            CHECK(test::rel_diff(direct.r, via.r) < 1e-12);
    }
}

TEST_CASE("vacuum correlation crosses zero exactly once, at tau1") {
    std::mt19937_64 rng(82005);
    for (int i = 0; i < 100; ++i) {
        auto p0 = test::random_pair(rng);
        if (p0.r == 0.0)
            p0.r = 0.5;
        const double t1 = tau1(p0, kNat);
        double prev_ratio = 1.0;
        for (double f : {0.1, 0.4, 0.8, 0.99}) {
            const double ratio = vacuum_pair(p0, f * t1, kNat).r / p0.r;
            CHECK(ratio > 0.0);
            CHECK(ratio < prev_ratio); // strictly decreasing before the zero
            prev_ratio = ratio;
        }
        for (double f : {1.01, 2.0, 10.0})
            CHECK(vacuum_pair(p0, f * t1, kNat).r * p0.r < 0.0);
    }
}

TEST_CASE("free spreading is driven by the conserved momentum covariance") {
    // Sigma(t) - Sigma0 = (t/m)^2 <pp> entrywise.
    std::mt19937_64 rng(82006);
    for (int i = 0; i < 100; ++i) {
        const auto s0 = test::random_spd(2 + i % 4, rng);
        PhysConsts c{0.5 + 0.1 * (i % 5), 1.0 + 0.2 * (i % 3), 0.0, 0.0};
        const auto pp = momentum_covariance(s0, c);
        for (double t : {0.5, 2.0}) {
            const Eigen::MatrixXd grown = vacuum_covariance(s0, t, c).entries();
            const Eigen::MatrixXd expected =
                s0.entries() + (t / c.mass) * (t / c.mass) * pp;
            CHECK(test::rel_matrix_diff(grown, expected) < 1e-12);
        }
    }
}

TEST_CASE("dispersion grows monotonically; overdamped and classical |r| decay") {
    std::mt19937_64 rng(82007);
    PhysConsts c{1.0, 1.0, 1.5, 0.8};
    for (int i = 0; i < 100; ++i) {
        auto p0 = test::random_pair(rng);
        if (p0.r == 0.0)
            p0.r = 0.25;
        double prev_vac = 0.0, prev_od = 0.0, prev_cl = 0.0;
        double prev_od_r = 1.1, prev_cl_r = 1.1;
        bool first = true;
        for (double t : {0.0, 0.2, 0.9, 2.7, 9.0}) {
            const auto vac = vacuum_pair(p0, t, c);
            const auto od = overdamped_pair(p0, t, c);
            const auto cl = extract_pair_stats(
                classical_covariance(pair_covariance(p0), t, c));
            if (!first) {
                CHECK(vac.sigma2 > prev_vac);
                CHECK(od.sigma2 > prev_od);
                CHECK(cl.sigma2 > prev_cl);
                CHECK(std::abs(od.r) < prev_od_r);
                CHECK(std::abs(cl.r) < prev_cl_r);
            }
            prev_vac = vac.sigma2;
            prev_od = od.sigma2;
            prev_cl = cl.sigma2;
            prev_od_r = std::abs(od.r);
            prev_cl_r = std::abs(cl.r);
            first = false;
        }
    }
}

TEST_CASE("initial correlation accelerates vacuum spreading") {
    // d sigma2 / d(r0^2) > 0 at fixed t.
    for (double t : {0.5, 2.0}) {
        double prev = vacuum_pair({1.0, 0.0}, t, kNat).sigma2;
        for (double r0 : {0.2, 0.5, 0.8, 0.95}) {
            const double s2 = vacuum_pair({1.0, r0}, t, kNat).sigma2;
            CHECK(s2 > prev);
            prev = s2;
        }
    }
}
