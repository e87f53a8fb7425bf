#include <gtest/gtest.h>

#include <sstream>

#include "icv/portfolio.hpp"
#include "test_support.hpp"

using namespace icv;
using namespace icv::portfolio;

namespace {

// Minimizes w'Mw over {1'w = 1, |w|_1 <= c} for p = 3 by a dense grid on the
// plane followed by shrinking pattern search.
double brute_force_p3(const Eigen::Matrix3d& m, double c) {
    const auto value = [&](double u, double v) {
        const Eigen::Vector3d w(u, v, 1.0 - u - v);
        if (w.cwiseAbs().sum() > c + 1e-15) return std::numeric_limits<double>::infinity();
        return w.dot(m * w);
    };
    const double lo = -(c - 1.0) / 2.0, hi = (c + 1.0) / 2.0;
    double bu = 1.0 / 3.0, bv = 1.0 / 3.0, best = value(bu, bv);
    const int steps = 400;
    for (int i = 0; i <= steps; ++i) {
        for (int j = 0; j <= steps; ++j) {
            const double u = lo + (hi - lo) * i / steps, v = lo + (hi - lo) * j / steps;
            const double f = value(u, v);
            if (f < best) best = f, bu = u, bv = v;
        }
    }
    for (double h = (hi - lo) / steps; h > 1e-13; h *= 0.5) {
        for (bool moved = true; moved;) {
            moved = false;
            for (int du = -1; du <= 1; ++du) {
                for (int dv = -1; dv <= 1; ++dv) {
                    const double f = value(bu + du * h, bv + dv * h);
                    if (f < best) best = f, bu += du * h, bv += dv * h, moved = true;
                }
            }
        }
    }
    return best;
}

} // namespace

TEST(Gmv, Examples) {
    EXPECT_TRUE(gmv_weights(Eigen::MatrixXd::Identity(4, 4)).w.isApprox(Eigen::VectorXd::Constant(4, 0.25)));
    const Eigen::MatrixXd inv = Eigen::Vector2d(1.0, 0.25).asDiagonal();
    const auto w = gmv_weights(inv);
    EXPECT_NEAR(w.w(0), 0.8, 1e-15);
    EXPECT_NEAR(w.w(1), 0.2, 1e-15);
    EXPECT_EQ(w.strategy, "GMV");
    EXPECT_DOUBLE_EQ(w.gross_exposure, 1.0);
    EXPECT_THROW(gmv_weights(-Eigen::MatrixXd::Identity(2, 2)), Error);
}

TEST(Gmv, PermutationScaleAndFirstOrderOptimality) {
    icv::detail::Rng rng(1);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd sigma = test::random_spd(6, rng);
        const Eigen::MatrixXd inv = sigma.inverse();
        const auto w = gmv_weights(inv).w;
        EXPECT_NEAR(w.sum(), 1.0, 1e-10);
        EXPECT_TRUE(gmv_weights(7.5 * inv).w.isApprox(w, 1e-12));

        Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
        perm.setIdentity();
        std::shuffle(perm.indices().data(), perm.indices().data() + 6, rng);
        const Eigen::MatrixXd pinv = perm * inv * perm.transpose();
        EXPECT_TRUE(gmv_weights(pinv).w.isApprox(perm * w, 1e-12));

        const double base = w.dot(sigma * w);
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd d(6);
            for (auto& v : d) v = z(rng);
            d.array() -= d.mean();
            const double t = 1e-3 * z(rng);
            const Eigen::VectorXd moved = w + t * d;
            EXPECT_GE(moved.dot(sigma * moved), base - 1e-14);
        }
    }
}

TEST(Mwm, ClosedFormExample) {
    MomentumSignal s;
    s.e = Eigen::Vector2d(1.0, 0.0);
    s.b = 0.5;
    const auto w = mwm_weights(Eigen::MatrixXd::Identity(2, 2), s);
    EXPECT_NEAR(w.w(0), 0.5, 1e-15);
    EXPECT_NEAR(w.w(1), 0.5, 1e-15);
}

TEST(Mwm, CollinearSignalIsDegenerate) {
    MomentumSignal s;
    s.e = Eigen::VectorXd::Constant(3, 0.02);
    s.b = 0.02;
    try {
        mwm_weights(Eigen::MatrixXd::Identity(3, 3), s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateSignal);
    }
}

TEST(Mwm, ConstraintsHoldOnRandomInstances) {
    icv::detail::Rng rng(2);
    std::normal_distribution<double> z(0.0, 0.01);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::MatrixXd inv = test::random_spd(8, rng).inverse();
        Eigen::VectorXd e(8);
        for (auto& v : e) v = z(rng);
        const auto sig = momentum_from_mean(e);
        const auto w = mwm_weights(inv, sig).w;
        EXPECT_NEAR(w.sum(), 1.0, 1e-10);
        EXPECT_NEAR(w.dot(sig.e), sig.b, 1e-10);
    }
}

TEST(Momentum, TrailingMeanAndQuintileTarget) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(6, 260);
    for (Eigen::Index i = 0; i < 6; ++i) r.row(i).tail(250).setConstant(0.001 * static_cast<double>(i));
    r.col(0).setConstant(100.0); // outside the trailing window
    const auto s = momentum_signal(r);
    EXPECT_NEAR(s.e(5), 0.005, 1e-15);
    EXPECT_NEAR(s.e(0), 0.0, 1e-15);
    // ceil(6/5) = 2 names: 0.005 and 0.004
    EXPECT_NEAR(s.b, 0.0045, 1e-15);
    try {
        momentum_signal(r.leftCols(249));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientMomentumHistory);
    }
}

TEST(EqualWeights, UniformAndTopQuintile) {
    EXPECT_TRUE(equal_weights(1).w.isApprox(Eigen::VectorXd::Ones(1)));
    Eigen::VectorXd e(30);
    for (Eigen::Index i = 0; i < 30; ++i) e(i) = static_cast<double>(i % 10);
    const auto w = equal_weights_top_quintile(momentum_from_mean(e));
    EXPECT_EQ((w.w.array() > 0.0).count(), 6);
    EXPECT_NEAR(w.w.maxCoeff(), 1.0 / 6.0, 1e-15);
    // e = 9 at indices 9, 19, 29; e = 8 at 8, 18, 28
    for (Eigen::Index i : {8, 9, 18, 19, 28, 29}) EXPECT_GT(w.w(i), 0.0);
    // ties keep the lower index
    const auto tied = equal_weights_top_quintile(momentum_from_mean(Eigen::VectorXd::Zero(7)));
    EXPECT_GT(tied.w(0), 0.0);
    EXPECT_GT(tied.w(1), 0.0);
    EXPECT_EQ(tied.w(2), 0.0);
}

TEST(Projection, BudgetL1IsEuclideanProjection) {
    icv::detail::Rng rng(3);
    std::normal_distribution<double> z;
    for (double c : {1.0, 1.2, 3.0}) {
        for (int rep = 0; rep < 50; ++rep) {
            Eigen::VectorXd x(7);
            for (auto& v : x) v = z(rng);
            const Eigen::VectorXd p = portfolio::detail::project_budget_l1(x, c);
            EXPECT_NEAR(p.sum(), 1.0, 1e-12);
            EXPECT_LE(p.cwiseAbs().sum(), c + 1e-12);
            // variational inequality against random feasible points
            for (int k = 0; k < 50; ++k) {
                Eigen::VectorXd y(7);
                for (auto& v : y) v = z(rng);
                const Eigen::VectorXd q = portfolio::detail::project_budget_l1(y, c);
                EXPECT_LE((x - p).dot(q - p), 1e-10);
            }
        }
    }
}

TEST(L1Gmv, MatchesBruteForceAtP3) {
    icv::detail::Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Matrix3d m = test::random_spd(3, rng);
        const auto w = gmv_l1_weights(m, 1.2);
        EXPECT_NEAR(w.w.sum(), 1.0, 1e-10);
        EXPECT_LE(w.gross_exposure, 1.2 + 1e-10);
        EXPECT_NEAR(w.w.dot(m * w.w), brute_force_p3(m, 1.2), 1e-6);
    }
}

TEST(L1Gmv, NoShortSaleAtUnitBound) {
    icv::detail::Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto w = gmv_l1_weights(test::random_spd(10, rng), 1.0);
        EXPECT_GE(w.w.minCoeff(), -1e-10);
        EXPECT_NEAR(w.w.sum(), 1.0, 1e-10);
    }
}

TEST(L1Gmv, LooseBoundRecoversGmv) {
    icv::detail::Rng rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd m = test::random_spd(5, rng);
        const auto l1 = gmv_l1_weights(m, 1e6);
        const auto gmv = gmv_weights(m.inverse());
        EXPECT_LT((l1.w - gmv.w).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(L1Gmv, KktResidualSmall) {
    icv::detail::Rng rng(7);
    const Eigen::MatrixXd m = test::random_spd(30, rng);
    const auto w = gmv_l1_weights(m, 1.2);
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().maxCoeff();
    EXPECT_LT(portfolio::detail::projected_gradient_residual(m, w.w, 1.2, 0.5 / lmax), 1e-8);
    EXPECT_THROW(gmv_l1_weights(m, 0.9), Error);
}

TEST(OosLoss, Examples) {
    const Eigen::MatrixXd truth = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    EXPECT_NEAR(oos_loss(Eigen::MatrixXd::Identity(2, 2), truth), 1.25, 1e-15);
    EXPECT_NEAR(oos_loss(truth, truth), 0.8, 1e-15);
    EXPECT_THROW(oos_loss(-truth, truth), Error);
}

TEST(OosLoss, TruthIsTheFloor) {
    icv::detail::Rng rng(8);
    const Eigen::MatrixXd truth = test::random_spd(6, rng);
    const double floor = 1.0 / truth.inverse().sum();
    EXPECT_NEAR(oos_loss(truth, truth), floor, 1e-10 * floor);
    for (int rep = 0; rep < 100; ++rep) EXPECT_GE(oos_loss(test::random_spd(6, rng), truth), floor - 1e-12);
}

TEST(Weights, Serialization) {
    auto w = equal_weights(2);
    w.date = "2024-01-02";
    std::ostringstream out;
    write_weights(out, w);
    EXPECT_EQ(out.str(), "EW,2024-01-02,1,0.5,0.5\n");
}
