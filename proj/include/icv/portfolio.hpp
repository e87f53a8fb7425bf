#pragma once

// Portfolio construction from a covariance estimate: global minimum variance,
// Markowitz with a momentum target, the gross-exposure constrained GMV and
// equal-weight baselines, plus the out-of-sample variance loss.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "icv/detail/text.hpp"
#include "icv/error.hpp"
#include "icv/spectral.hpp"

namespace icv::portfolio {

struct Weights {
    Eigen::VectorXd w;
    std::string strategy;
    std::string date;
    double gross_exposure = 0.0;
};

inline Weights make_weights(Eigen::VectorXd w, std::string strategy) {
    Weights out;
    out.gross_exposure = w.cwiseAbs().sum();
    out.w = std::move(w);
    out.strategy = std::move(strategy);
    return out;
}

// One line: strategy,date,gross,w_1,...,w_p
inline void write_weights(std::ostream& out, const Weights& w) {
    out << w.strategy << ',' << w.date << ',' << icv::detail::fmt_double(w.gross_exposure);
    for (Eigen::Index i = 0; i < w.w.size(); ++i) out << ',' << icv::detail::fmt_double(w.w(i));
    out << '\n';
}

struct MomentumSignal {
    Eigen::VectorXd e; // trailing mean daily log-return per asset
    double b = 0.0;    // mean of the top-quintile entries of e
};

inline constexpr Eigen::Index kMomentumDays = 250;

inline Eigen::Index quintile_size(Eigen::Index p) { return (p + 4) / 5; }

/// Indices of the k largest entries; ties go to the lower index.
inline std::vector<Eigen::Index> top_indices(const Eigen::VectorXd& e, Eigen::Index k) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(e.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return e(a) > e(b); });
    idx.resize(static_cast<std::size_t>(std::min(k, e.size())));
    return idx;
}

inline MomentumSignal momentum_from_mean(Eigen::VectorXd e) {
    require(e.size() >= 1, ErrorCode::InvalidArgument, "empty signal");
    MomentumSignal s;
    const auto top = top_indices(e, quintile_size(e.size()));
    for (auto i : top) s.b += e(i);
    s.b /= static_cast<double>(top.size());
    s.e = std::move(e);
    return s;
}

/// `daily_returns` is p x T (oldest column first); uses the last `days` columns.
inline MomentumSignal momentum_signal(const Eigen::MatrixXd& daily_returns, Eigen::Index days = kMomentumDays) {
    if (daily_returns.cols() < days) {
        fail(ErrorCode::InsufficientMomentumHistory,
             "momentum needs " + std::to_string(days) + " days of returns, got " + std::to_string(daily_returns.cols()));
    }
    return momentum_from_mean(daily_returns.rightCols(days).rowwise().mean());
}

inline Weights gmv_weights(const Eigen::MatrixXd& sigma_inv) {
    require(sigma_inv.rows() == sigma_inv.cols() && sigma_inv.rows() >= 1, ErrorCode::InvalidArgument, "square matrix expected");
    const Eigen::VectorXd raw = sigma_inv.rowwise().sum();
    const double a = raw.sum();
    if (!(a > 0.0)) fail(ErrorCode::NotPD, "1' Sigma^-1 1 must be positive");
    return make_weights(raw / a, "GMV");
}

inline Weights mwm_weights(const Eigen::MatrixXd& sigma_inv, const MomentumSignal& signal) {
    const auto p = sigma_inv.rows();
    require(sigma_inv.cols() == p && signal.e.size() == p, ErrorCode::InvalidArgument, "dimension mismatch");
    const Eigen::VectorXd s1 = sigma_inv.rowwise().sum();
    const Eigen::VectorXd se = sigma_inv * signal.e;
    const double a = s1.sum(), b = signal.e.dot(s1), c = signal.e.dot(se);
    if (!(a > 0.0) || c < 0.0) fail(ErrorCode::NotPD, "Sigma^-1 is not positive definite");
    const double denom = a * c - b * b;
    if (!(denom > 1e-12 * a * c)) fail(ErrorCode::DegenerateSignal, "momentum signal is collinear with the unit vector");
    const double c1 = (c - signal.b * b) / denom;
    const double c2 = (signal.b * a - b) / denom;
    return make_weights(c1 * s1 + c2 * se, "MwM");
}

inline Weights equal_weights(Eigen::Index p) {
    require(p >= 1, ErrorCode::InvalidArgument, "p must be >= 1");
    return make_weights(Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p)), "EW");
}

inline Weights equal_weights_top_quintile(const MomentumSignal& signal) {
    const auto p = signal.e.size();
    require(p >= 1, ErrorCode::InvalidArgument, "empty signal");
    const auto top = top_indices(signal.e, quintile_size(p));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    for (auto i : top) w(i) = 1.0 / static_cast<double>(top.size());
    return make_weights(std::move(w), "EW-TQ");
}

namespace detail {

// tau with sum_i max(x_i - tau, 0) = mass (mass > 0).
inline double upper_threshold(const Eigen::VectorXd& x, double mass) {
    std::vector<double> v(x.data(), x.data() + x.size());
    std::sort(v.begin(), v.end(), std::greater<>());
    double cum = 0.0, tau = v.front() - mass;
    for (std::size_t k = 0; k < v.size(); ++k) {
        cum += v[k];
        const double t = (cum - mass) / static_cast<double>(k + 1);
        if (v[k] > t) tau = t;
        else break;
    }
    return tau;
}

// Euclidean projection onto {w : 1'w = 1, |w|_1 <= c}, c >= 1.
// Without the L1 bound the answer is x shifted along 1. Otherwise the positive
// part carries (c+1)/2 and the negative part (c-1)/2, which decouples into two
// one-sided thresholds.
inline Eigen::VectorXd project_budget_l1(const Eigen::VectorXd& x, double c) {
    const auto p = x.size();
    Eigen::VectorXd w = x.array() - (x.sum() - 1.0) / static_cast<double>(p);
    if (w.cwiseAbs().sum() <= c) return w;
    const double pos = 0.5 * (c + 1.0), neg = 0.5 * (c - 1.0);
    const double hi = upper_threshold(x, pos);
    const double lo = neg > 0.0 ? -upper_threshold(-x, neg) : -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p; ++i) w(i) = std::max(x(i) - hi, 0.0) - std::max(lo - x(i), 0.0);
    return w;
}

// Stationarity measure |w - P(w - t grad)| / t for the constrained problem.
inline double projected_gradient_residual(const Eigen::MatrixXd& m, const Eigen::VectorXd& w, double c, double step) {
    const Eigen::VectorXd grad = 2.0 * m * w;
    return (w - project_budget_l1(w - step * grad, c)).norm() / step;
}

// Exact minimizer on a fixed support/sign pattern; empty when the linear
// system is singular or the solution leaves the pattern.
inline Eigen::VectorXd polish_on_pattern(const Eigen::MatrixXd& m, const Eigen::VectorXd& w, double c, double zero_tol) {
    const auto p = w.size();
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < p; ++i)
        if (std::abs(w(i)) > zero_tol) support.push_back(i);
    const auto k = static_cast<Eigen::Index>(support.size());
    if (k == 0) return {};
    Eigen::VectorXd sign(k);
    bool mixed = false;
    for (Eigen::Index j = 0; j < k; ++j) {
        sign(j) = w(support[static_cast<std::size_t>(j)]) > 0.0 ? 1.0 : -1.0;
        mixed = mixed || sign(j) < 0.0;
    }
    const bool l1_active = mixed && w.cwiseAbs().sum() > c - 1e-9;
    const Eigen::Index dim = k + 1 + (l1_active ? 1 : 0);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = 2.0 * m(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    rhs(k) = 1.0;
    if (l1_active) {
        kkt.block(0, k + 1, k, 1) = sign;
        kkt.block(k + 1, 0, 1, k) = sign.transpose();
        rhs(k + 1) = c;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return {};
    const Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (sol(j) * sign(j) <= 0.0) return {};
        out(support[static_cast<std::size_t>(j)]) = sol(j);
    }
    if (out.cwiseAbs().sum() > c + 1e-12) return {};
    return out;
}

} // namespace detail

struct L1Options {
    int max_iterations = 50000;
    double tolerance = 1e-13;
};

/// argmin w'M w subject to 1'w = 1 and |w|_1 <= c. Accelerated projected
/// gradient from equal weights, then an exact solve on the detected pattern.
inline Weights gmv_l1_weights(const Eigen::MatrixXd& m, double c = 1.2, const L1Options& opt = {}) {
    const auto p = m.rows();
    require(p >= 1 && m.cols() == p, ErrorCode::InvalidArgument, "square matrix expected");
    require(c >= 1.0, ErrorCode::InvalidArgument, "gross exposure bound must be >= 1");
    spectral::require_symmetric(m, "M1");

    const double lmax = std::max(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff(), 1e-300);
    const double step = 1.0 / (2.0 * lmax);
    const auto objective = [&](const Eigen::VectorXd& w) { return w.dot(m * w); };

    Eigen::VectorXd w = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
    Eigen::VectorXd y = w;
    double t = 1.0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Eigen::VectorXd next = detail::project_budget_l1(y - step * 2.0 * (m * y), c);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        // restart momentum whenever the objective goes up
        if (objective(next) > objective(w)) {
            t = 1.0;
            y = w;
            continue;
        }
        y = next + ((t - 1.0) / t_next) * (next - w);
        const double change = (next - w).norm();
        w = next;
        t = t_next;
        if (change <= opt.tolerance * std::max(1.0, w.norm())) break;
    }

    const double scale = std::max(w.cwiseAbs().maxCoeff(), 1.0);
    for (double tol : {1e-9, 1e-7, 1e-5}) {
        const Eigen::VectorXd polished = detail::polish_on_pattern(m, w, c, tol * scale);
        if (polished.size() == 0) continue;
        if (objective(polished) <= objective(w) + 1e-14 * std::max(1.0, std::abs(objective(w))) &&
            detail::projected_gradient_residual(m, polished, c, step) <= detail::projected_gradient_residual(m, w, c, step) + 1e-12) {
            w = polished;
            break;
        }
    }
    w /= w.sum();
    return make_weights(std::move(w), "L1-GMV");
}

/// 1' S^-1 Sigma S^-1 1 / (1' S^-1 1)^2 for the GMV portfolio built from S.
inline double oos_loss(const Eigen::MatrixXd& sigma_hat, const Eigen::MatrixXd& sigma_true) {
    const auto p = sigma_hat.rows();
    require(p >= 1 && sigma_hat.cols() == p && sigma_true.rows() == p && sigma_true.cols() == p, ErrorCode::InvalidArgument,
            "dimension mismatch");
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma_hat);
    if (llt.info() != Eigen::Success) fail(ErrorCode::NotPD, "estimate is not positive definite");
    const Eigen::VectorXd u = llt.solve(Eigen::VectorXd::Ones(p));
    const double a = u.sum();
    return u.dot(sigma_true * u) / (a * a);
}

/// Variance of the portfolio w under Sigma, for weights already built.
inline double portfolio_variance(const Eigen::VectorXd& w, const Eigen::MatrixXd& sigma) { return w.dot(sigma * w); }

} // namespace icv::portfolio
