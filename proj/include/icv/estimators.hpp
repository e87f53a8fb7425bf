#pragma once

// Covariance estimators feeding the portfolio layer.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icv/detail/parallel.hpp"
#include "icv/detail/text.hpp"
#include "icv/error.hpp"
#include "icv/ingest.hpp"
#include "icv/sync.hpp"

namespace icv::estimators {

using ingest::Nanos;
using sync::ReturnsMatrix;

enum class CovKind { RCV, TVA, SAMPLE, LS, TSCV, SQML };

constexpr std::string_view to_string(CovKind k) noexcept {
    switch (k) {
    case CovKind::RCV: return "RCV";
    case CovKind::TVA: return "TVA";
    case CovKind::SAMPLE: return "SAMPLE";
    case CovKind::LS: return "LS";
    case CovKind::TSCV: return "TSCV";
    case CovKind::SQML: return "SQML";
    }
    return "?";
}

inline CovKind cov_kind_from_string(std::string_view s) {
    for (auto k : {CovKind::RCV, CovKind::TVA, CovKind::SAMPLE, CovKind::LS, CovKind::TSCV, CovKind::SQML}) {
        if (s == to_string(k)) return k;
    }
    fail(ErrorCode::InvalidArgument, "unknown covariance kind '" + std::string(s) + "'");
}

struct CovEstimate {
    Eigen::MatrixXd matrix;
    CovKind kind = CovKind::RCV;
    Nanos window_start = 0;
    Nanos window_end = 0;
    Eigen::Index n_obs = 0;
    std::vector<std::string> warnings;
};

namespace detail {
inline void set_window(CovEstimate& e, const ReturnsMatrix& r) {
    if (!r.grid.empty()) {
        e.window_start = r.grid.front();
        e.window_end = r.grid.back();
    }
}
} // namespace detail

/// Sum of outer products of the return columns.
inline CovEstimate realized_cov(const ReturnsMatrix& r) {
    require(r.count() >= 1, ErrorCode::InvalidArgument, "realized_cov needs at least one return");
    CovEstimate e;
    e.kind = CovKind::RCV;
    e.matrix = r.deltas * r.deltas.transpose();
    e.n_obs = r.count();
    detail::set_window(e, r);
    return e;
}

/// Self-normalized sum  sum_k dY_k dY_k' / |dY_k|^2  over columns with non-zero norm.
/// Indices of dropped zero-norm columns are appended to `dropped` when given.
inline Eigen::MatrixXd normalized_outer_sum(const Eigen::MatrixXd& deltas, std::vector<Eigen::Index>* dropped = nullptr) {
    const auto p = deltas.rows();
    Eigen::MatrixXd scaled(p, deltas.cols());
    Eigen::Index kept = 0;
    for (Eigen::Index k = 0; k < deltas.cols(); ++k) {
        const double nrm = deltas.col(k).norm();
        if (nrm == 0.0) {
            if (dropped) dropped->push_back(k);
            continue;
        }
        scaled.col(kept++) = deltas.col(k) / nrm;
    }
    return scaled.leftCols(kept) * scaled.leftCols(kept).transpose();
}

/// Time-variation-adjusted realized covariance:
///   tr(sum dY dY') / n * sum dY dY' / |dY|^2.
/// Zero-norm columns (flat previous-tick prices) are dropped and n shrinks.
inline CovEstimate tva_cov(const ReturnsMatrix& r) {
    require(r.count() >= 1, ErrorCode::InvalidArgument, "tva_cov needs at least one return");
    CovEstimate e;
    e.kind = CovKind::TVA;
    detail::set_window(e, r);
    std::vector<Eigen::Index> dropped;
    const Eigen::MatrixXd normalized = normalized_outer_sum(r.deltas, &dropped);
    const Eigen::Index n = r.count() - static_cast<Eigen::Index>(dropped.size());
    if (n == 0) fail(ErrorCode::DegenerateReturn, "every return column has zero norm");
    for (auto k : dropped) e.warnings.push_back("DegenerateReturn(" + std::to_string(k) + "): zero-norm column dropped");
    const double trace = r.deltas.squaredNorm();
    e.matrix = (trace / static_cast<double>(n)) * normalized;
    e.n_obs = n;
    return e;
}

/// (1/J) sum of outer products of daily log-returns, no mean subtraction.
inline CovEstimate sample_cov_daily(const ReturnsMatrix& daily) {
    require(daily.count() >= 1, ErrorCode::InvalidArgument, "sample_cov_daily needs at least one daily return");
    CovEstimate e;
    e.kind = CovKind::SAMPLE;
    e.matrix = daily.deltas * daily.deltas.transpose() / static_cast<double>(daily.count());
    e.n_obs = daily.count();
    detail::set_window(e, daily);
    return e;
}

inline CovEstimate sample_cov_daily(const sync::SyncPanel& daily_logprices) { return sample_cov_daily(sync::to_returns(daily_logprices)); }

struct LinearShrinkageDiagnostics {
    double kappa = 0.0;
    double lambda_bar = 0.0;
    double d2 = 0.0;
    double b2 = 0.0;
    double b2_bar = 0.0;
    bool spherical = false; // d2 == 0: S already equals its target
};

/// Ledoit-Wolf (2004) identity-target shrinkage (1-k) S + k lambda_bar I.
inline std::pair<CovEstimate, LinearShrinkageDiagnostics> linear_shrinkage(const CovEstimate& sample, const Eigen::MatrixXd& returns) {
    const auto& s = sample.matrix;
    const auto p = s.rows();
    const auto j = returns.cols();
    require(p >= 1 && s.cols() == p && returns.rows() == p, ErrorCode::InvalidArgument, "dimension mismatch");
    require(j >= 2, ErrorCode::InvalidArgument, "linear_shrinkage needs J >= 2 returns");
    const double pd = static_cast<double>(p);

    LinearShrinkageDiagnostics diag;
    diag.lambda_bar = s.trace() / pd;
    Eigen::MatrixXd centered = s;
    centered.diagonal().array() -= diag.lambda_bar;
    diag.d2 = centered.squaredNorm() / pd;

    // ||x x' - S||_F^2 = |x|^4 - 2 x'Sx + ||S||_F^2
    const double s_norm2 = s.squaredNorm();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < j; ++k) {
        const auto x = returns.col(k);
        const double xx = x.squaredNorm();
        acc += std::max(0.0, xx * xx - 2.0 * x.dot(s * x) + s_norm2);
    }
    diag.b2_bar = acc / (static_cast<double>(j) * static_cast<double>(j)) / pd;
    diag.b2 = std::min(diag.b2_bar, diag.d2);
    if (diag.d2 == 0.0) {
        diag.kappa = 1.0;
        diag.spherical = true;
    } else {
        diag.kappa = diag.b2 / diag.d2;
    }

    CovEstimate out = sample;
    out.kind = CovKind::LS;
    out.matrix = (1.0 - diag.kappa) * s;
    out.matrix.diagonal().array() += diag.kappa * diag.lambda_bar;
    if (diag.spherical) out.warnings.push_back("sample covariance already spherical; kappa set to 1");
    return {std::move(out), diag};
}

namespace detail {

// Pairwise refresh sync restricted to [start, end]; returns the two synchronized log-price paths.
inline std::pair<std::vector<double>, std::vector<double>> pair_refresh(const ingest::TickSeries& a, const ingest::TickSeries& b,
                                                                        Nanos start, Nanos end) {
    std::vector<double> ya, yb;
    std::size_t ia = static_cast<std::size_t>(std::lower_bound(a.times.begin(), a.times.end(), start) - a.times.begin());
    std::size_t ib = static_cast<std::size_t>(std::lower_bound(b.times.begin(), b.times.end(), start) - b.times.begin());
    while (ia < a.size() && ib < b.size()) {
        const Nanos t = std::max(a.times[ia], b.times[ib]);
        if (t > end) break;
        while (ia + 1 < a.size() && a.times[ia + 1] <= t) ++ia;
        while (ib + 1 < b.size() && b.times[ib + 1] <= t) ++ib;
        ya.push_back(a.log_prices[ia]);
        yb.push_back(b.log_prices[ib]);
        ++ia;
        ++ib;
    }
    return {std::move(ya), std::move(yb)};
}

// Average lag-K realized covariance: (1/K) sum_{k>=K} (x_k - x_{k-K})(y_k - y_{k-K}).
inline double subsampled_rcov(const std::vector<double>& x, const std::vector<double>& y, std::size_t lag) {
    double acc = 0.0;
    for (std::size_t k = lag; k < x.size(); ++k) acc += (x[k] - x[k - lag]) * (y[k] - y[k - lag]);
    return acc / static_cast<double>(lag);
}

} // namespace detail

/// Two-scale covariance between two series over [start, end].
inline double tscv_pair(const ingest::TickSeries& a, const ingest::TickSeries& b, Nanos start, Nanos end, std::size_t slow,
                        std::size_t fast) {
    require(slow > fast && fast >= 1, ErrorCode::InvalidArgument, "two-scale estimator needs K > J >= 1");
    const auto [x, y] = detail::pair_refresh(a, b, start, end);
    if (x.size() < slow + 1) fail(ErrorCode::PairTooSparse, "(" + a.symbol + "," + b.symbol + ")");
    const double n = static_cast<double>(x.size() - 1);
    const double nk = (n - static_cast<double>(slow) + 1.0) / static_cast<double>(slow);
    const double nj = (n - static_cast<double>(fast) + 1.0) / static_cast<double>(fast);
    // small-sample factor makes the estimator unbiased without noise
    return (detail::subsampled_rcov(x, y, slow) - (nk / nj) * detail::subsampled_rcov(x, y, fast)) / (1.0 - nk / nj);
}

/// Pairwise two-scale covariance matrix (raw; not necessarily PSD).
inline CovEstimate tscv_pairwise(std::span<const ingest::TickSeries> series, Nanos start, Nanos end, std::size_t slow = 10,
                                 std::size_t fast = 1, unsigned threads = 1) {
    require(slow > fast && fast >= 1, ErrorCode::InvalidArgument, "two-scale estimator needs K > J >= 1");
    const auto p = static_cast<Eigen::Index>(series.size());
    CovEstimate e;
    e.kind = CovKind::TSCV;
    e.window_start = start;
    e.window_end = end;
    e.matrix.resize(p, p);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i; j < p; ++j) pairs.emplace_back(i, j);
    }
    icv::detail::parallel_for(pairs.size(), threads, [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        const double v = tscv_pair(series[static_cast<std::size_t>(i)], series[static_cast<std::size_t>(j)], start, end, slow, fast);
        e.matrix(i, j) = v;
        e.matrix(j, i) = v;
    });
    return e;
}

// Text form: `p,kind,window_start,window_end,n_obs` then p rows.
inline void write_cov(std::ostream& out, const CovEstimate& e) {
    out << e.matrix.rows() << ',' << to_string(e.kind) << ',' << e.window_start << ',' << e.window_end << ',' << e.n_obs << '\n';
    for (Eigen::Index i = 0; i < e.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.matrix.cols(); ++j) out << (j ? "," : "") << icv::detail::fmt_double(e.matrix(i, j));
        out << '\n';
    }
}

inline CovEstimate read_cov(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::ParseError, "line 1: empty covariance file");
    const auto head = icv::detail::split(icv::detail::trim(line), ',');
    CovEstimate e;
    long p = 0;
    if (head.size() != 5 || !icv::detail::parse_int(head[0], p) || p < 0 || !icv::detail::parse_int(head[2], e.window_start) ||
        !icv::detail::parse_int(head[3], e.window_end) || !icv::detail::parse_int(head[4], e.n_obs)) {
        fail(ErrorCode::ParseError, "line 1: malformed covariance header");
    }
    e.kind = cov_kind_from_string(head[1]);
    e.matrix.resize(p, p);
    for (long i = 0; i < p; ++i) {
        if (!std::getline(in, line)) fail(ErrorCode::ParseError, "line " + std::to_string(i + 2) + ": missing row");
        const auto f = icv::detail::split(icv::detail::trim(line), ',');
        if (static_cast<long>(f.size()) != p) fail(ErrorCode::ParseError, "line " + std::to_string(i + 2) + ": wrong row length");
        for (long j = 0; j < p; ++j) {
            if (!icv::detail::parse_double(f[static_cast<std::size_t>(j)], e.matrix(i, j))) {
                fail(ErrorCode::ParseError, "line " + std::to_string(i + 2) + ": bad value");
            }
        }
    }
    return e;
}

} // namespace icv::estimators
