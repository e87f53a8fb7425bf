#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

#include "icv/estimators.hpp"
#include "icv/spectral.hpp"
#include "test_support.hpp"

using namespace icv;
using spectral::sym_eig;

TEST(SymEig, IdentityHasUnitSpectrum) {
    const auto e = sym_eig(Eigen::MatrixXd::Identity(3, 3));
    EXPECT_TRUE(e.values.isApprox(Eigen::Vector3d(1, 1, 1)));
    EXPECT_TRUE(e.vectors.isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(SymEig, TwoByTwoMatchesCharacteristicPolynomial) {
    Eigen::Matrix2d m;
    m << 2, 1, 1, 2;
    const auto e = sym_eig(m);
    EXPECT_NEAR(e.values(0), 3.0, 1e-14);
    EXPECT_NEAR(e.values(1), 1.0, 1e-14);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(e.vectors(0, 0), r, 1e-14);
    EXPECT_NEAR(e.vectors(1, 0), r, 1e-14);
    // tie in magnitude: the first entry is made positive
    EXPECT_NEAR(e.vectors(0, 1), r, 1e-14);
    EXPECT_NEAR(e.vectors(1, 1), -r, 1e-14);
}

TEST(SymEig, DiagonalInputIsPermuted) {
    const Eigen::MatrixXd m = Eigen::Vector3d(5, 2, 9).asDiagonal();
    const auto e = sym_eig(m);
    EXPECT_EQ(e.values, Eigen::Vector3d(9, 5, 2));
    Eigen::Matrix3d expected;
    expected << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    EXPECT_TRUE(e.vectors.isApprox(expected));
}

TEST(SymEig, RejectsNonSymmetric) {
    Eigen::Matrix2d m;
    m << 1, 2, 0, 1;
    try {
        sym_eig(m);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::NotSymmetric);
    }
}

TEST(SymEig, RoundTripAndOrientationOnRandomMatrices) {
    detail::Rng rng(11);
    std::uniform_int_distribution<int> dim(1, 40);
    for (int rep = 0; rep < 60; ++rep) {
        const auto p = dim(rng);
        const Eigen::MatrixXd m = test::random_symmetric(p, rng);
        const auto e = sym_eig(m);
        EXPECT_LT(test::rel_frobenius(spectral::reconstruct(e), m), 1e-8);
        EXPECT_LT((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-8);
        for (Eigen::Index k = 1; k < p; ++k) EXPECT_GE(e.values(k - 1), e.values(k));
        for (Eigen::Index k = 0; k < p; ++k) {
            Eigen::Index arg = 0;
            e.vectors.col(k).cwiseAbs().maxCoeff(&arg);
            EXPECT_GT(e.vectors(arg, k), 0.0);
        }
    }
}

TEST(SymEig, IsDeterministic) {
    detail::Rng rng(5);
    const Eigen::MatrixXd m = test::random_symmetric(25, rng);
    const auto a = sym_eig(m);
    const auto b = sym_eig(m);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.vectors, b.vectors);
}

TEST(PsdProject, LeavesPsdInputUnchanged) {
    detail::Rng rng(2);
    const Eigen::MatrixXd s = test::random_spd(6, rng);
    EXPECT_EQ(spectral::psd_project(s), s);
}

TEST(PsdProject, ShiftsAndRescalesIndefiniteInput) {
    const Eigen::MatrixXd m = Eigen::Vector2d(1, -1).asDiagonal();
    const Eigen::MatrixXd expected = Eigen::Vector2d(1, 0).asDiagonal();
    EXPECT_TRUE(spectral::psd_project(m).isApprox(expected, 1e-15));
    EXPECT_LT(spectral::psd_project(-Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PsdProject, IsIdempotentAndPsd) {
    detail::Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd m = test::random_symmetric(8, rng);
        const Eigen::MatrixXd once = spectral::psd_project(m);
        const Eigen::MatrixXd twice = spectral::psd_project(once);
        EXPECT_GE(sym_eig(once).values.minCoeff(), -1e-12);
        EXPECT_LT((once - twice).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Esd, StepFunction) {
    const spectral::ESD single(std::vector<double>{2.0});
    EXPECT_EQ(single(1.9), 0.0);
    EXPECT_EQ(single(2.0), 1.0);
    const spectral::ESD two(std::vector<double>{3.0, 1.0});
    EXPECT_EQ(two(2.0), 0.5);
    EXPECT_EQ(two(-1e300), 0.0);
    EXPECT_EQ(two(1e300), 1.0);
}

// Marchenko-Pastur CDF (unit population variance) by quadrature of its density.
static double mp_cdf(double x, double y) {
    const double a = (1 - std::sqrt(y)) * (1 - std::sqrt(y)), b = (1 + std::sqrt(y)) * (1 + std::sqrt(y));
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate([&](double t) { return std::sqrt(std::max(0.0, (b - t) * (t - a))) / (2 * M_PI * y * t); }, a, x);
}

TEST(Esd, SampleCovarianceFollowsMarchenkoPastur) {
    detail::Rng rng(17);
    const Eigen::Index p = 500, n = 1000;
    const Eigen::MatrixXd z = test::random_matrix(p, n, rng);
    const Eigen::MatrixXd s = z * z.transpose() / static_cast<double>(n);
    const auto f = spectral::esd(sym_eig(s).values);
    double sup = 0.0;
    for (double x = 0.0; x <= 3.2; x += 0.01) sup = std::max(sup, std::abs(f(x) - mp_cdf(x, 0.5)));
    EXPECT_LT(sup, 0.05);
}

TEST(Esd, KsDistance) {
    const spectral::ESD a(std::vector<double>{1, 2, 3, 4});
    const spectral::ESD b(std::vector<double>{1, 2, 3, 10});
    EXPECT_DOUBLE_EQ(spectral::ks_distance(a, b), 0.25);
    EXPECT_EQ(spectral::ks_distance(a, a), 0.0);
}

TEST(Dispersion, KnownValues) {
    EXPECT_EQ(spectral::eigenvalue_dispersion(Eigen::VectorXd::Ones(4)), 0.0);
    EXPECT_DOUBLE_EQ(spectral::eigenvalue_dispersion(Eigen::Vector2d(3, 1)), 2.0);
    EXPECT_EQ(spectral::eigenvalue_dispersion(Eigen::VectorXd::Constant(1, 7.0)), 0.0);
}

TEST(Dispersion, TvaSpreadsIdentitySpectrum) {
    detail::Rng rng(23);
    sync::ReturnsMatrix r;
    r.deltas = test::random_matrix(200, 400, rng) * 0.01;
    const auto tva = estimators::tva_cov(r);
    const Eigen::MatrixXd normalized = tva.matrix / (tva.matrix.trace() / 200.0);
    // Marchenko-Pastur variance at y = 0.5 is 0.5
    EXPECT_GT(spectral::eigenvalue_dispersion(sym_eig(normalized)), 0.2);
}
