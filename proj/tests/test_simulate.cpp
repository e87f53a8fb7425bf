#include <gtest/gtest.h>

#include "icv/estimators.hpp"
#include "icv/simulate.hpp"
#include "icv/spectral.hpp"
#include "test_support.hpp"

using namespace icv;
using namespace icv::simulate;

namespace {

ClassCModel identity_model(Eigen::Index p, GammaPath g = GammaPath(1.0), std::uint64_t seed = 1) {
    ClassCModel m;
    m.lambda = Eigen::MatrixXd::Identity(p, p);
    m.gamma = std::move(g);
    m.seed = seed;
    return m;
}

} // namespace

TEST(Gamma, PiecewiseIntegral) {
    const auto g = GammaPath::two_piece(1.0, 2.0, 0.5);
    EXPECT_DOUBLE_EQ(g.integral_sq(0.0, 1.0), 2.5);
    EXPECT_DOUBLE_EQ(g.integral_sq(0.25, 0.75), 0.25 + 1.0);
    EXPECT_DOUBLE_EQ(g.integral_sq(0.6, 0.7), 0.4);
    EXPECT_EQ(g.integral_sq(0.7, 0.6), 0.0);
    EXPECT_EQ(g(0.49), 1.0);
    EXPECT_EQ(g(0.5), 2.0);
    const GammaPath many({0.0, 0.1, 0.2, 0.3}, {1.0, 3.0, 0.5, 2.0});
    EXPECT_NEAR(many.integral_sq(0.05, 0.35), 0.05 + 0.9 + 0.025 + 0.2, 1e-15);
}

TEST(TrueIcv, KnownWindows) {
    const auto m = identity_model(3);
    EXPECT_TRUE(true_icv(m, 0.0, 2.0).isApprox(2.0 * Eigen::MatrixXd::Identity(3, 3)));
    const auto m2 = identity_model(3, GammaPath::two_piece(1.0, 2.0, 0.5));
    EXPECT_TRUE(true_icv(m2, 0.0, 1.0).isApprox(2.5 * Eigen::MatrixXd::Identity(3, 3)));
}

TEST(Validate, RejectsBadModels) {
    auto m = identity_model(2);
    m.lambda *= 2.0;
    EXPECT_THROW(validate(m), Error);
    auto n = identity_model(2);
    n.noise_cov = Eigen::Vector2d(1.0, -1.0).asDiagonal();
    try {
        validate(n);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidNoiseCov);
    }
    auto g = identity_model(2, GammaPath(1e7));
    EXPECT_THROW(validate(g), Error);
}

TEST(Simulate, BrownianIncrementsHaveDtCovariance) {
    const auto m = identity_model(3);
    const Eigen::Index steps = 100000;
    const auto rec = simulate_paths(m, steps, 1.0);
    const Eigen::MatrixXd inc = rec.latent.rightCols(steps) - rec.latent.leftCols(steps);
    const Eigen::MatrixXd second = inc * inc.transpose() / static_cast<double>(steps);
    const double dt = 1.0 / static_cast<double>(steps);
    // Monte Carlo error of each entry is about dt * sqrt(2 / steps)
    EXPECT_LT((second - dt * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 6.0 * dt * std::sqrt(2.0 / steps));
}

TEST(Simulate, RealizedCovarianceConvergesToTrueIcv) {
    detail::Rng rng(9);
    ClassCModel m;
    m.lambda = lambda_from_spectrum(Eigen::Vector3d(0.5, 1.0, 3.0), rng);
    m.gamma = GammaPath::two_piece(1.0, 2.0, 0.5);
    m.seed = 33;
    const auto rec = simulate_paths(m, 100000, 1.0);
    sync::ReturnsMatrix r;
    r.deltas = rec.latent.rightCols(100000) - rec.latent.leftCols(100000);
    const auto rcv = estimators::realized_cov(r);
    EXPECT_LT(test::rel_frobenius(rcv.matrix, rec.icv), 0.02);
}

TEST(Simulate, NoiseDominatesFineIncrements) {
    auto m = identity_model(2);
    m.noise_cov = Eigen::Vector2d(1e-4, 4e-4).asDiagonal();
    for (Eigen::Index steps : {2000, 20000}) {
        const auto rec = simulate_paths(m, steps, 1.0);
        const Eigen::MatrixXd inc = rec.observed.rightCols(steps) - rec.observed.leftCols(steps);
        const Eigen::VectorXd var = inc.rowwise().squaredNorm() / static_cast<double>(steps);
        const double dt = 1.0 / static_cast<double>(steps);
        for (Eigen::Index i = 0; i < 2; ++i) {
            const double expected = dt + 2.0 * m.noise_cov(i, i);
            // MA(1) increments: relative sd of the mean square is about sqrt(3 / steps)
            EXPECT_NEAR(var(i), expected, 5.0 * std::sqrt(3.0 / static_cast<double>(steps)) * expected);
        }
    }
}

TEST(Simulate, IsDeterministicGivenSeed) {
    const auto m = identity_model(4, GammaPath(1.0), 77);
    TickOptions t;
    t.emit_ticks = true;
    t.intensity = {300.0};
    const auto a = simulate_paths(m, 2000, 1.0, t);
    const auto b = simulate_paths(m, 2000, 1.0, t);
    EXPECT_EQ(a.latent, b.latent);
    ASSERT_EQ(a.ticks.size(), 4u);
    EXPECT_EQ(a.ticks[2], b.ticks[2]);
}

TEST(Simulate, TickEmissionRespectsIntensityAndSession) {
    const auto m = identity_model(3, GammaPath(1.0), 5);
    TickOptions t;
    t.emit_ticks = true;
    t.intensity = {500.0, 2000.0, 100.0};
    const Eigen::Index steps = 23400;
    const auto rec = simulate_paths(m, steps, 1.0, t);
    const double dt = 1.0 / static_cast<double>(steps);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& s = rec.ticks[i];
        const double expected = static_cast<double>(steps + 1) * (1.0 - std::exp(-t.intensity[i] * dt));
        EXPECT_NEAR(static_cast<double>(s.size()), expected, 5.0 * std::sqrt(expected));
        for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LT(s.times[k - 1], s.times[k]);
        EXPECT_GE(s.times.front(), 0);
        EXPECT_LE(s.times.back(), t.session.length());
        EXPECT_EQ(s.symbol, default_symbol(static_cast<Eigen::Index>(i)));
    }
}

TEST(LambdaBuilders, TraceNormalizedAndSpectrumPreserved) {
    detail::Rng rng(12);
    const Eigen::VectorXd spec = spectrum_from_mixture(10, {1.0, 3.0}, {0.5, 0.5});
    EXPECT_EQ((spec.array() == 1.0).count(), 5);
    const Eigen::MatrixXd l = lambda_from_spectrum(spec, rng);
    EXPECT_NEAR(l.squaredNorm(), 10.0, 1e-10);
    const Eigen::VectorXd eig = spectral::sym_eig(l * l.transpose()).values;
    EXPECT_NEAR(eig(0), 1.5, 1e-10);
    EXPECT_NEAR(eig(9), 0.5, 1e-10);
    const Eigen::MatrixXd e = lambda_equicorrelation(8, 0.3, 0.2, rng);
    EXPECT_NEAR(e.squaredNorm(), 8.0, 1e-10);
    const Eigen::MatrixXd q = haar_orthogonal(6, rng);
    EXPECT_TRUE((q.transpose() * q).isApprox(Eigen::MatrixXd::Identity(6, 6), 1e-12));
}
