#include <gtest/gtest.h>

#include <sstream>

#include "icv/estimators.hpp"
#include "icv/simulate.hpp"
#include "icv/spectral.hpp"
#include "test_support.hpp"

using namespace icv;
using namespace icv::estimators;
using sync::ReturnsMatrix;

namespace {

ReturnsMatrix returns_of(Eigen::MatrixXd d) {
    ReturnsMatrix r;
    r.deltas = std::move(d);
    return r;
}

Eigen::MatrixXd increments(const Eigen::MatrixXd& path) {
    const auto n = path.cols() - 1;
    return path.rightCols(n) - path.leftCols(n);
}

// Every fine point becomes a tick for every asset (synchronous observation).
std::vector<ingest::TickSeries> synchronous_ticks(const Eigen::MatrixXd& path) {
    std::vector<ingest::TickSeries> out(static_cast<std::size_t>(path.rows()));
    for (Eigen::Index i = 0; i < path.rows(); ++i) {
        auto& s = out[static_cast<std::size_t>(i)];
        s.symbol = simulate::default_symbol(i);
        for (Eigen::Index k = 0; k < path.cols(); ++k) {
            s.times.push_back(k);
            s.log_prices.push_back(path(i, k));
        }
    }
    return out;
}

} // namespace

TEST(RealizedCov, OuterProducts) {
    const Eigen::Vector3d v(1, -2, 0.5);
    EXPECT_TRUE(realized_cov(returns_of(v)).matrix.isApprox(v * v.transpose()));
    Eigen::MatrixXd one(1, 3);
    one << 0.1, -0.2, 0.3;
    EXPECT_NEAR(realized_cov(returns_of(one)).matrix(0, 0), 0.14, 1e-15);
}

TEST(Tva, SingleColumnAndScalarCases) {
    const Eigen::Vector3d v(1, -2, 0.5);
    EXPECT_TRUE(tva_cov(returns_of(v)).matrix.isApprox(v * v.transpose(), 1e-14));
    Eigen::MatrixXd one(1, 3);
    one << 0.1, -0.2, 0.3;
    EXPECT_NEAR(tva_cov(returns_of(one)).matrix(0, 0), 0.14, 1e-15);
}

TEST(Tva, MatchesDirectFormula) {
    icv::detail::Rng rng(3);
    const Eigen::MatrixXd d = test::random_matrix(4, 7, rng);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
    double tr = 0.0;
    for (Eigen::Index k = 0; k < 7; ++k) {
        expected += d.col(k) * d.col(k).transpose() / d.col(k).squaredNorm();
        tr += d.col(k).squaredNorm();
    }
    expected *= tr / 7.0;
    EXPECT_LT(test::rel_frobenius(tva_cov(returns_of(d)).matrix, expected), 1e-13);
}

TEST(Tva, ScalingProperties) {
    icv::detail::Rng rng(4);
    Eigen::MatrixXd d = test::random_matrix(5, 20, rng);
    const Eigen::MatrixXd base = tva_cov(returns_of(d)).matrix;
    EXPECT_LT(test::rel_frobenius(tva_cov(returns_of(3.0 * d)).matrix, 9.0 * base), 1e-13);
    const Eigen::MatrixXd norm_before = normalized_outer_sum(d);
    d.col(3) *= 17.0;
    EXPECT_LT(test::rel_frobenius(normalized_outer_sum(d), norm_before), 1e-13);
}

TEST(Tva, ZeroColumnIsDroppedWithWarning) {
    Eigen::MatrixXd d(2, 3);
    d << 1, 0, 2, 1, 0, -1;
    const auto e = tva_cov(returns_of(d));
    EXPECT_EQ(e.n_obs, 2);
    ASSERT_EQ(e.warnings.size(), 1u);
    EXPECT_NE(e.warnings[0].find("DegenerateReturn(1)"), std::string::npos);
    Eigen::MatrixXd kept(2, 2);
    kept << 1, 2, 1, -1;
    EXPECT_TRUE(e.matrix.isApprox(tva_cov(returns_of(kept)).matrix));
    try {
        tva_cov(returns_of(Eigen::MatrixXd::Zero(2, 2)));
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), ErrorCode::DegenerateReturn);
    }
}

TEST(Tva, ConvergesUnderTimeVaryingVolatility) {
    simulate::ClassCModel m;
    m.lambda = Eigen::MatrixXd::Identity(5, 5);
    m.gamma = simulate::GammaPath::two_piece(1.0, 2.0, 0.5);
    m.seed = 21;
    const auto rec = simulate::simulate_paths(m, 10000, 1.0);
    const auto tva = tva_cov(returns_of(increments(rec.latent)));
    EXPECT_LT(test::rel_frobenius(tva.matrix, rec.icv), 0.03);
}

TEST(SampleCov, DailyReturns) {
    const Eigen::Vector2d v(0.01, -0.02);
    EXPECT_TRUE(sample_cov_daily(returns_of(v)).matrix.isApprox(v * v.transpose()));
    const Eigen::MatrixXd rep = v.replicate(1, 5);
    EXPECT_TRUE(sample_cov_daily(returns_of(rep)).matrix.isApprox(v * v.transpose()));

    icv::detail::Rng rng(5);
    const Eigen::MatrixXd sigma = test::random_spd(3, rng);
    const Eigen::MatrixXd root = simulate::psd_sqrt(sigma);
    const Eigen::MatrixXd draws = root * test::random_matrix(3, 10000, rng);
    EXPECT_LT(test::rel_frobenius(sample_cov_daily(returns_of(draws)).matrix, sigma), 0.03);
}

TEST(LinearShrinkage, SphericalSampleIsFixedPoint) {
    CovEstimate s;
    s.kind = CovKind::SAMPLE;
    s.matrix = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    icv::detail::Rng rng(6);
    const auto [ls, diag] = linear_shrinkage(s, test::random_matrix(3, 10, rng));
    EXPECT_TRUE(diag.spherical);
    EXPECT_EQ(diag.kappa, 1.0);
    EXPECT_TRUE(ls.matrix.isApprox(s.matrix));
    EXPECT_EQ(ls.kind, CovKind::LS);
}

TEST(LinearShrinkage, RepeatedVectorHasNoShrinkage) {
    const Eigen::Vector3d v(0.3, -0.1, 0.2);
    const Eigen::MatrixXd x = v.replicate(1, 6);
    const auto s = sample_cov_daily(returns_of(x));
    const auto [ls, diag] = linear_shrinkage(s, x);
    EXPECT_NEAR(diag.b2_bar, 0.0, 1e-15);
    EXPECT_NEAR(diag.kappa, 0.0, 1e-12);
    EXPECT_TRUE(ls.matrix.isApprox(s.matrix));
}

TEST(LinearShrinkage, VanishesForLargeSamples) {
    icv::detail::Rng rng(7);
    const Eigen::MatrixXd sigma = Eigen::Vector3d(1.0, 2.0, 4.0).asDiagonal();
    const Eigen::MatrixXd x = simulate::psd_sqrt(sigma) * test::random_matrix(3, 100000, rng);
    const auto [ls, diag] = linear_shrinkage(sample_cov_daily(returns_of(x)), x);
    EXPECT_LT(diag.kappa, 0.05);
    EXPECT_LE(diag.b2, diag.d2);
}

TEST(LinearShrinkage, EigenvaluesAreConvexCombinations) {
    icv::detail::Rng rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd x = test::random_matrix(10, 15, rng);
        const auto s = sample_cov_daily(returns_of(x));
        const auto [ls, diag] = linear_shrinkage(s, x);
        EXPECT_GE(diag.kappa, 0.0);
        EXPECT_LE(diag.kappa, 1.0);
        const auto es = spectral::sym_eig(s.matrix).values;
        const auto el = spectral::sym_eig(ls.matrix).values;
        for (Eigen::Index i = 0; i < 10; ++i) {
            const double expected = (1 - diag.kappa) * es(i) + diag.kappa * diag.lambda_bar;
            EXPECT_NEAR(el(i), expected, 1e-12);
        }
    }
}

TEST(Tscv, RejectsBadScales) {
    const std::vector<ingest::TickSeries> s = synchronous_ticks(Eigen::MatrixXd::Zero(2, 50));
    EXPECT_THROW(tscv_pairwise(s, 0, 100, 1, 1), Error);
    EXPECT_THROW(tscv_pairwise(s, 0, 100, 3, 5), Error);
}

TEST(Tscv, TooFewPairwiseRefreshes) {
    const std::vector<ingest::TickSeries> s = synchronous_ticks(Eigen::MatrixXd::Zero(2, 8));
    try {
        tscv_pairwise(s, 0, 100, 10, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PairTooSparse);
    }
}

TEST(Tscv, NoiselessEstimateIsCentredOnTrueIcv) {
    // Single-path sampling error at K=10, n=1e4 is about 5%; the replicate mean isolates bias.
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 2);
    const int reps = 8;
    Eigen::MatrixXd truth;
    for (int rep = 0; rep < reps; ++rep) {
        simulate::ClassCModel m;
        m.lambda = Eigen::MatrixXd::Identity(2, 2);
        m.seed = 100 + static_cast<std::uint64_t>(rep);
        const auto rec = simulate::simulate_paths(m, 10000, 1.0);
        const auto e = tscv_pairwise(synchronous_ticks(rec.latent), 0, 10000, 10, 1);
        EXPECT_EQ(e.matrix, e.matrix.transpose());
        mean += e.matrix / reps;
        truth = rec.icv;
    }
    EXPECT_LT(test::rel_frobenius(mean, truth), 0.05);
}

TEST(Tscv, NoiselessSinglePathConverges) {
    simulate::ClassCModel m;
    m.lambda = Eigen::MatrixXd::Identity(2, 2);
    m.seed = 300;
    const auto rec = simulate::simulate_paths(m, 100000, 1.0);
    const auto e = tscv_pairwise(synchronous_ticks(rec.latent), 0, 100000, 10, 1);
    EXPECT_LT(test::rel_frobenius(e.matrix, rec.icv), 0.05);
}

TEST(Tscv, BeatsRealizedCovarianceUnderNoise) {
    simulate::ClassCModel m;
    m.lambda = Eigen::MatrixXd::Identity(2, 2);
    m.gamma = simulate::GammaPath(0.01);
    m.noise_cov = 1e-6 * Eigen::MatrixXd::Identity(2, 2);
    m.seed = 44;
    const auto rec = simulate::simulate_paths(m, 20000, 1.0);
    const auto ticks = synchronous_ticks(rec.observed);
    const auto tscv = tscv_pairwise(ticks, 0, 20000, 10, 1);
    const auto rcv = realized_cov(returns_of(increments(rec.observed)));
    EXPECT_LT((tscv.matrix - rec.icv).norm(), 0.3 * (rcv.matrix - rec.icv).norm());
}

TEST(Tscv, ParallelMatchesSerial) {
    icv::detail::Rng rng(2);
    const auto ticks = synchronous_ticks(test::random_matrix(5, 200, rng));
    const auto a = tscv_pairwise(ticks, 0, 200, 5, 1, 1);
    const auto b = tscv_pairwise(ticks, 0, 200, 5, 1, 3);
    EXPECT_EQ(a.matrix, b.matrix);
}

TEST(CovIo, RoundTrip) {
    icv::detail::Rng rng(1);
    CovEstimate e;
    e.kind = CovKind::TSCV;
    e.matrix = test::random_symmetric(3, rng);
    e.window_start = 5;
    e.window_end = 99;
    e.n_obs = 42;
    std::stringstream buf;
    write_cov(buf, e);
    const auto back = read_cov(buf);
    EXPECT_EQ(back.matrix, e.matrix);
    EXPECT_EQ(back.kind, e.kind);
    EXPECT_EQ(back.window_end, 99);
    EXPECT_EQ(back.n_obs, 42);
}
