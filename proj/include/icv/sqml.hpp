#pragma once

// Sample-splitting shrinkage QML estimator of the integrated covariance:
// eigenvectors from a TVA matrix over an earlier window, eigenvalues from
// QML fits of the rotated high-frequency series over the later window.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "icv/detail/parallel.hpp"
#include "icv/error.hpp"
#include "icv/estimators.hpp"
#include "icv/qml.hpp"
#include "icv/spectral.hpp"
#include "icv/sync.hpp"

namespace icv::sqml {

enum class Variant { SQrM, SQrD };

struct SqmlConfig {
    Variant variant = Variant::SQrM;
    int total_days = 6;     // J
    int history_days = 5;   // J1
    int holding_days = 1;   // holding period scale in the final sum

    [[nodiscard]] int dense_days() const noexcept { return total_days - history_days; }
};

inline void validate(const SqmlConfig& c) {
    require(c.history_days >= 1 && c.history_days < c.total_days, ErrorCode::InvalidArgument, "need 1 <= J1 < J");
    require(c.dense_days() >= 1 && c.dense_days() <= 5, ErrorCode::InvalidArgument, "J - J1 must lie in [1, 5]");
    require(c.holding_days >= 1, ErrorCode::InvalidArgument, "holding period must be >= 1 day");
}

struct SqmlEstimate {
    Eigen::MatrixXd basis;      // U*
    Eigen::VectorXd v_hat;      // regularized eigenvalues, all > 0
    Eigen::MatrixXd sigma_hat;
    Eigen::MatrixXd sigma_inv_hat;
    std::vector<std::vector<qml::QmlFit>> fits; // [day][series]
    std::vector<std::string> warnings;
    bool all_converged = true;
};

/// U* from the TVA matrix of the history returns (sign-fixed, non-increasing order).
inline Eigen::MatrixXd eigenbasis_from_history(const sync::ReturnsMatrix& history) {
    const auto tva = estimators::tva_cov(history);
    return spectral::sym_eig(tva.matrix).vectors;
}

inline Eigen::MatrixXd eigenbasis_from_history(const sync::SyncPanel& panel) { return eigenbasis_from_history(sync::to_returns(panel)); }

/// Frobenius-optimal diagonal for a fixed basis: v_i = u_i' Sigma u_i.
inline Eigen::VectorXd oracle_shrinkage(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& sigma) {
    require(basis.rows() == sigma.rows() && sigma.rows() == sigma.cols(), ErrorCode::InvalidArgument, "dimension mismatch");
    return (basis.transpose() * sigma * basis).diagonal();
}

/// Same-sample realized eigenvalues sum_k (u_i' dX_k)^2 with U taken from
/// the same returns; the spread-out estimate the split design avoids.
inline Eigen::VectorXd naive_realized_eigenvalues(const sync::ReturnsMatrix& returns) {
    const Eigen::MatrixXd basis = eigenbasis_from_history(returns);
    return (basis.transpose() * returns.deltas).rowwise().squaredNorm();
}

/// Assembles U* diag(v) U*' and its inverse from a basis and positive eigenvalues.
inline SqmlEstimate assemble(Eigen::MatrixXd basis, Eigen::VectorXd v_hat) {
    require((v_hat.array() > 0.0).all(), ErrorCode::InvalidArgument, "eigenvalues must be positive");
    SqmlEstimate e;
    e.sigma_hat = basis * v_hat.asDiagonal() * basis.transpose();
    e.sigma_inv_hat = basis * v_hat.cwiseInverse().asDiagonal() * basis.transpose();
    e.basis = std::move(basis);
    e.v_hat = std::move(v_hat);
    return e;
}

inline constexpr Eigen::Index kMinDenseReturns = 4;

/// Full estimator. `history` holds the (already concatenated) low-frequency
/// returns for the eigenvector window; `dense_days` one refresh-time panel
/// per day of the eigenvalue window. Days too short for a QML fit are dropped.
inline SqmlEstimate sqml_estimate(const SqmlConfig& cfg, const sync::ReturnsMatrix& history, std::span<const sync::SyncPanel> dense_days,
                                  const qml::QmlOptions& qopt = {}, unsigned threads = 1) {
    validate(cfg);
    require(static_cast<int>(dense_days.size()) == cfg.dense_days(), ErrorCode::InvalidArgument,
            "expected J - J1 dense days, got " + std::to_string(dense_days.size()));
    Eigen::MatrixXd basis = eigenbasis_from_history(history);
    const auto p = basis.rows();

    std::vector<const sync::SyncPanel*> usable;
    std::vector<std::string> warnings;
    for (std::size_t d = 0; d < dense_days.size(); ++d) {
        const auto& day = dense_days[d];
        require(day.assets() == p, ErrorCode::InvalidArgument, "dense panel / history dimension mismatch");
        if (day.returns() < kMinDenseReturns) {
            warnings.push_back("dense day " + std::to_string(d) + " dropped: fewer than 4 refresh returns");
            continue;
        }
        usable.push_back(&day);
    }
    if (usable.empty()) fail(ErrorCode::DayPoolEmpty, "no dense day has enough refresh returns");

    std::vector<std::vector<qml::QmlFit>> fits(usable.size(), std::vector<qml::QmlFit>(static_cast<std::size_t>(p)));
    std::vector<Eigen::MatrixXd> rotated(usable.size());
    for (std::size_t d = 0; d < usable.size(); ++d) rotated[d] = qml::rotate_series(*usable[d], basis);

    const std::size_t jobs = usable.size() * static_cast<std::size_t>(p);
    detail::parallel_for(jobs, threads, [&](std::size_t job) {
        const std::size_t d = job / static_cast<std::size_t>(p);
        const auto i = static_cast<Eigen::Index>(job % static_cast<std::size_t>(p));
        const Eigen::VectorXd series = rotated[d].row(i).transpose();
        // Equal-spacing convention: Delta = window / N, so the window length cancels.
        fits[d][static_cast<std::size_t>(i)] = qml::qml_fit(std::span<const double>(series.data(), static_cast<std::size_t>(series.size())),
                                                            1.0 / static_cast<double>(series.size()), qopt);
    });

    Eigen::VectorXd v = Eigen::VectorXd::Zero(p);
    bool all_converged = true;
    for (std::size_t d = 0; d < fits.size(); ++d) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const auto& f = fits[d][static_cast<std::size_t>(i)];
            v(i) += f.integrated_variance;
            if (!f.converged) {
                all_converged = false;
                warnings.push_back("QML fit did not converge (day " + std::to_string(d) + ", series " + std::to_string(i) + ")");
            }
        }
    }
    v *= static_cast<double>(cfg.holding_days) / static_cast<double>(cfg.dense_days());

    auto est = assemble(std::move(basis), std::move(v));
    est.fits = std::move(fits);
    est.warnings = std::move(warnings);
    est.all_converged = all_converged;
    return est;
}

inline SqmlEstimate sqml_estimate(const SqmlConfig& cfg, const sync::SyncPanel& history_panel, std::span<const sync::SyncPanel> dense_days,
                                  const qml::QmlOptions& qopt = {}, unsigned threads = 1) {
    return sqml_estimate(cfg, sync::to_returns(history_panel), dense_days, qopt, threads);
}

// Text form: `p`, then v_hat on one line, then the p basis rows.
inline void write_estimate(std::ostream& out, const SqmlEstimate& e) {
    out << e.basis.rows() << '\n';
    for (Eigen::Index i = 0; i < e.v_hat.size(); ++i) out << (i ? "," : "") << icv::detail::fmt_double(e.v_hat(i));
    out << '\n';
    for (Eigen::Index i = 0; i < e.basis.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.basis.cols(); ++j) out << (j ? "," : "") << icv::detail::fmt_double(e.basis(i, j));
        out << '\n';
    }
}

} // namespace icv::sqml
