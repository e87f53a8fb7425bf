#pragma once

// Symmetric-matrix spectral primitives shared by every estimator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "icv/error.hpp"

namespace icv::spectral {

/// Eigenvalues in non-increasing order; column i of `vectors` pairs with values(i).
struct EigenSystem {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    [[nodiscard]] Eigen::Index size() const noexcept { return values.size(); }
};

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
    if (m.rows() != m.cols()) return false;
    const double scale = max_abs(m);
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

inline void require_symmetric(const Eigen::MatrixXd& m, const char* what = "matrix") {
    require(m.rows() == m.cols(), ErrorCode::NotSymmetric, std::string(what) + " is not square");
    require(is_symmetric(m), ErrorCode::NotSymmetric, std::string(what) + " is not symmetric within 1e-10");
}

namespace detail {

// Flip v so that its entry of largest magnitude is positive (first index wins ties).
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best * (1.0 + 1e-12)) {
            best = a;
            arg = i;
        }
    }
    if (v(arg) < 0.0) v = -v;
}

inline bool lex_greater(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) != b(i)) return a(i) > b(i);
    }
    return false;
}

} // namespace detail

/// Full decomposition of a symmetric matrix. Values are non-increasing, each
/// eigenvector has its largest-magnitude entry positive, and eigenvectors of
/// a repeated eigenvalue are ordered lexicographically descending.
inline EigenSystem sym_eig(const Eigen::MatrixXd& m) {
    require_symmetric(m, "sym_eig input");
    const Eigen::Index p = m.rows();
    EigenSystem out;
    if (p == 0) return out;

    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "eigen solver failed");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<Eigen::VectorXd> vecs;
    vecs.reserve(order.size());
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd v = solver.eigenvectors().col(j);
        detail::fix_sign(v);
        vecs.push_back(std::move(v));
    }
    const Eigen::VectorXd& vals = solver.eigenvalues();
    const double tie_tol = 1e-12 * std::max(1.0, vals.cwiseAbs().maxCoeff());

    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return vals(a) > vals(b); });
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo + 1;
        while (hi < order.size() && vals(order[hi - 1]) - vals(order[hi]) <= tie_tol) ++hi;
        std::sort(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi),
                  [&](Eigen::Index a, Eigen::Index b) {
                      return detail::lex_greater(vecs[static_cast<std::size_t>(a)], vecs[static_cast<std::size_t>(b)]);
                  });
        lo = hi;
    }

    out.values.resize(p);
    out.vectors.resize(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        out.values(k) = vals(src);
        out.vectors.col(k) = vecs[static_cast<std::size_t>(src)];
    }
    // Tie clusters sorted by vector order may leave values out of order by
    // at most tie_tol; make the sequence exactly non-increasing.
    for (Eigen::Index k = 1; k < p; ++k) out.values(k) = std::min(out.values(k), out.values(k - 1));
    return out;
}

inline Eigen::MatrixXd reconstruct(const EigenSystem& e) {
    return e.vectors * e.values.asDiagonal() * e.vectors.transpose();
}

/// (M + l I) / (1 + l) with l the negative part of the smallest eigenvalue.
inline Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m) {
    require_symmetric(m, "psd_project input");
    if (m.rows() == 0) return m;
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
    const double neg = std::max(0.0, -lmin);
    if (neg == 0.0) return m;
    Eigen::MatrixXd out = sym;
    out.diagonal().array() += neg;
    out /= (1.0 + neg);
    return out;
}

/// Empirical spectral distribution F(x) = #{l_i <= x} / p.
class ESD {
public:
    ESD() = default;
    explicit ESD(std::vector<double> values) : sorted_(std::move(values)) {
        std::sort(sorted_.begin(), sorted_.end());
    }
    explicit ESD(const Eigen::VectorXd& values) : ESD(std::vector<double>(values.data(), values.data() + values.size())) {}

    [[nodiscard]] double operator()(double x) const {
        if (sorted_.empty()) return 0.0;
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    [[nodiscard]] const std::vector<double>& sorted_values() const noexcept { return sorted_; }
    [[nodiscard]] std::size_t size() const noexcept { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

inline ESD esd(const Eigen::VectorXd& values) { return ESD(values); }

/// Kolmogorov-Smirnov distance between two step functions, evaluated at every jump.
inline double ks_distance(const ESD& a, const ESD& b) {
    double d = 0.0;
    for (const auto* src : {&a.sorted_values(), &b.sorted_values()}) {
        for (double x : *src) {
            d = std::max(d, std::abs(a(x) - b(x)));
            const double left = std::nextafter(x, -INFINITY);
            d = std::max(d, std::abs(a(left) - b(left)));
        }
    }
    return d;
}

/// Unbiased (n-1) sample variance of the eigenvalues; 0 for p <= 1.
inline double eigenvalue_dispersion(const Eigen::VectorXd& values) {
    const auto p = values.size();
    if (p <= 1) return 0.0;
    const double mean = values.mean();
    return (values.array() - mean).square().sum() / static_cast<double>(p - 1);
}

inline double eigenvalue_dispersion(const EigenSystem& e) { return eigenvalue_dispersion(e.values); }

} // namespace icv::spectral
