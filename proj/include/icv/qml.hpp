#pragma once

// Quasi-maximum-likelihood integrated variance of a scalar noisy series.
//
// Returns dY of a constant-volatility price observed with IID Gaussian noise
// are MA(1): Cov(dY) = Omega, tridiagonal Toeplitz with diagonal
// s + 2 a2 and off-diagonal -a2, where s = sigma2 * Delta. Omega is
// diagonalized by the DST-I basis with eigenvalues
//     s + a2 * w_j,   w_j = 2 (1 - cos(j pi / (N+1))),   j = 1..N,
// so once the sine coordinates of dY are known each likelihood evaluation
// is O(N).

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "icv/error.hpp"
#include "icv/sync.hpp"

namespace icv::qml {

struct TridiagToeplitz {
    Eigen::Index n = 0;
    double diag = 0.0;
    double offdiag = 0.0;

    static TridiagToeplitz from_params(Eigen::Index n, double sigma2, double a2, double delta) {
        return {n, sigma2 * delta + 2.0 * a2, -a2};
    }

    /// j-th eigenvalue, j = 1..n.
    [[nodiscard]] double eigenvalue(Eigen::Index j) const {
        return diag + 2.0 * offdiag * std::cos(static_cast<double>(j) * std::numbers::pi / static_cast<double>(n + 1));
    }

    [[nodiscard]] Eigen::MatrixXd dense() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        m.diagonal().setConstant(diag);
        if (n > 1) {
            m.diagonal(1).setConstant(offdiag);
            m.diagonal(-1).setConstant(offdiag);
        }
        return m;
    }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace detail

/// Orthonormal DST-I coordinates: c_j = sqrt(2/(N+1)) sum_k x_k sin(j k pi/(N+1)).
inline std::vector<double> sine_coordinates(std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> out(x.size());
    if (n == 0) return out;
    std::vector<double> in(x.begin(), x.end());
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_RODFT00, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    // FFTW's RODFT00 is unnormalized with a factor of 2.
    const double scale = 0.5 * std::sqrt(2.0 / static_cast<double>(n + 1));
    for (auto& v : out) v *= scale;
    return out;
}

/// Precomputed spectral data for repeated likelihood evaluation of one series.
class QuasiLikelihood {
public:
    explicit QuasiLikelihood(std::span<const double> returns) : n_(returns.size()) {
        require(n_ >= 2, ErrorCode::InvalidArgument, "quasi-likelihood needs N >= 2 returns");
        const auto c = sine_coordinates(returns);
        coord2_.resize(n_);
        weight_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            coord2_[j] = c[j] * c[j];
            weight_[j] = 2.0 * (1.0 - std::cos(static_cast<double>(j + 1) * std::numbers::pi / static_cast<double>(n_ + 1)));
        }
        sum_sq_ = 0.0;
        for (double r : returns) sum_sq_ += r * r;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double sum_squares() const noexcept { return sum_sq_; }

    /// Log-likelihood in terms of s = sigma2 * Delta and a2.
    [[nodiscard]] double operator()(double s, double a2) const {
        double logdet = 0.0, quad = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double lam = s + a2 * weight_[j];
            if (!(lam > 0.0)) fail(ErrorCode::InvalidParams, "non-positive covariance eigenvalue");
            logdet += std::log(lam);
            quad += coord2_[j] / lam;
        }
        return -0.5 * logdet - 0.5 * static_cast<double>(n_) * std::log(2.0 * std::numbers::pi) - 0.5 * quad;
    }

    /// Gradient and Hessian of the log-likelihood in (s, a2).
    void derivatives(double s, double a2, std::array<double, 2>& grad, std::array<double, 3>& hess) const {
        grad = {0.0, 0.0};
        hess = {0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < n_; ++j) {
            const double w = weight_[j];
            const double lam = s + a2 * w;
            const double inv = 1.0 / lam, inv2 = inv * inv, inv3 = inv2 * inv;
            const double g = -0.5 * inv + 0.5 * coord2_[j] * inv2;
            const double h = 0.5 * inv2 - coord2_[j] * inv3;
            grad[0] += g;
            grad[1] += g * w;
            hess[0] += h;
            hess[1] += h * w;
            hess[2] += h * w * w;
        }
    }

private:
    std::size_t n_;
    std::vector<double> coord2_;
    std::vector<double> weight_;
    double sum_sq_ = 0.0;
};

/// Gaussian MA(1) quasi-log-likelihood of returns dY under spot variance
/// sigma2, noise variance a2 and spacing delta.
inline double quasi_loglik(std::span<const double> returns, double sigma2, double a2, double delta) {
    require(returns.size() >= 2, ErrorCode::InvalidArgument, "quasi_loglik needs N >= 2");
    if (!(sigma2 > 0.0) || !(a2 >= 0.0) || !(delta > 0.0)) fail(ErrorCode::InvalidParams, "need sigma2 > 0, a2 >= 0, delta > 0");
    return QuasiLikelihood(returns)(sigma2 * delta, a2);
}

struct QmlOptions {
    int max_iterations = 500;
    double rel_tol = 1e-10;
    bool fix_zero_noise = false; // closed-form MLE with a2 = 0
    bool newton_polish = true;
};

struct QmlFit {
    double spot_variance = 0.0;       // sigma2 per unit time
    double noise_variance = 0.0;      // a2
    double integrated_variance = 0.0; // sigma2 * N * Delta
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

struct Simplex {
    std::array<std::array<double, 2>, 3> x;
    std::array<double, 3> f;
};

} // namespace detail

/// Maximizes the quasi-likelihood over sigma2 > 0, a2 >= 0.
///
/// Works on returns rescaled to unit mean square (the fit is scale
/// equivariant) with a Nelder-Mead search over (log s, log(a2 + eps)) and
/// an optional bounded Newton polish.
inline QmlFit qml_fit(std::span<const double> returns, double delta, const QmlOptions& opt = {}) {
    const std::size_t n = returns.size();
    require(n >= 4, ErrorCode::InvalidArgument, "qml_fit needs N >= 4 returns");
    require(delta > 0.0, ErrorCode::InvalidArgument, "delta must be positive");
    double ms = 0.0;
    for (double r : returns) ms += r * r;
    ms /= static_cast<double>(n);
    require(ms > 0.0 && std::isfinite(ms), ErrorCode::InvalidArgument, "returns are identically zero");

    std::vector<double> x(returns.begin(), returns.end());
    const double root = std::sqrt(ms);
    for (auto& v : x) v /= root;
    const double nd = static_cast<double>(n);

    QmlFit fit;
    const auto finish = [&](double s, double a2, double ll) {
        fit.spot_variance = s * ms / delta;
        fit.noise_variance = a2 * ms;
        fit.integrated_variance = s * ms * nd;
        fit.loglik = ll - 0.5 * nd * std::log(ms);
        return fit;
    };

    const QuasiLikelihood lik(x);
    if (opt.fix_zero_noise) {
        fit.converged = true;
        return finish(1.0, 0.0, lik(1.0, 0.0)); // mean square is 1 after rescaling
    }

    double r1 = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) r1 += x[k] * x[k + 1];
    r1 /= nd;
    const double a0 = r1 < 0.0 ? -r1 : 1e-12;
    const double s0 = std::max(nd - 2.0 * nd * a0, 0.05 * nd) / nd;

    constexpr double eps = std::numeric_limits<double>::epsilon();
    const auto to_params = [&](const std::array<double, 2>& t) { return std::array<double, 2>{std::exp(t[0]), std::max(0.0, std::exp(t[1]) - eps)}; };
    const auto objective = [&](const std::array<double, 2>& t) {
        const auto [s, a2] = to_params(t);
        if (!(s > 0.0) || !std::isfinite(s)) return std::numeric_limits<double>::infinity();
        return -lik(s, a2);
    };

    detail::Simplex sx;
    sx.x[0] = {std::log(s0), std::log(a0 + eps)};
    sx.x[1] = {sx.x[0][0] + 0.5, sx.x[0][1]};
    sx.x[2] = {sx.x[0][0], sx.x[0][1] + 1.0};
    for (int k = 0; k < 3; ++k) sx.f[k] = objective(sx.x[k]);

    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return sx.f[a] < sx.f[b]; });
        detail::Simplex sorted;
        for (int k = 0; k < 3; ++k) {
            sorted.x[k] = sx.x[idx[k]];
            sorted.f[k] = sx.f[idx[k]];
        }
        sx = sorted;
        if (sx.f[2] - sx.f[0] <= opt.rel_tol * std::abs(sx.f[0])) {
            fit.converged = true;
            break;
        }
        const std::array<double, 2> c{0.5 * (sx.x[0][0] + sx.x[1][0]), 0.5 * (sx.x[0][1] + sx.x[1][1])};
        const auto along = [&](double t) { return std::array<double, 2>{c[0] + t * (sx.x[2][0] - c[0]), c[1] + t * (sx.x[2][1] - c[1])}; };
        const auto xr = along(-1.0);
        const double fr = objective(xr);
        if (fr < sx.f[0]) {
            const auto xe = along(-2.0);
            const double fe = objective(xe);
            if (fe < fr) {
                sx.x[2] = xe;
                sx.f[2] = fe;
            } else {
                sx.x[2] = xr;
                sx.f[2] = fr;
            }
            continue;
        }
        if (fr < sx.f[1]) {
            sx.x[2] = xr;
            sx.f[2] = fr;
            continue;
        }
        const bool outside = fr < sx.f[2];
        const auto xc = along(outside ? -0.5 : 0.5);
        const double fc = objective(xc);
        if (fc < (outside ? fr : sx.f[2])) {
            sx.x[2] = xc;
            sx.f[2] = fc;
            continue;
        }
        for (int k = 1; k < 3; ++k) {
            sx.x[k] = {0.5 * (sx.x[0][0] + sx.x[k][0]), 0.5 * (sx.x[0][1] + sx.x[k][1])};
            sx.f[k] = objective(sx.x[k]);
        }
    }
    fit.iterations = it;
    const int best = static_cast<int>(std::min_element(sx.f.begin(), sx.f.end()) - sx.f.begin());
    auto [s, a2] = to_params(sx.x[best]);
    double ll = -sx.f[best];

    if (opt.newton_polish) {
        for (int step = 0; step < 20; ++step) {
            std::array<double, 2> g;
            std::array<double, 3> h;
            lik.derivatives(s, a2, g, h);
            double ds = 0.0, da = 0.0;
            const double det = h[0] * h[2] - h[1] * h[1];
            const bool interior = a2 > 0.0 && h[0] < 0.0 && det > 0.0;
            if (interior) {
                ds = -(h[2] * g[0] - h[1] * g[1]) / det;
                da = -(-h[1] * g[0] + h[0] * g[1]) / det;
            } else if (h[0] < 0.0) {
                ds = -g[0] / h[0]; // a2 pinned at its bound
            }
            double t = 1.0;
            bool moved = false;
            for (int back = 0; back < 30; ++back, t *= 0.5) {
                const double sn = s + t * ds, an = std::max(0.0, a2 + t * da);
                if (!(sn > 0.0)) continue;
                const double lln = lik(sn, an);
                if (lln >= ll) {
                    moved = lln > ll || sn != s || an != a2;
                    s = sn;
                    a2 = an;
                    ll = lln;
                    break;
                }
            }
            if (!moved || (std::abs(ds) <= 1e-14 * s && std::abs(da) <= 1e-14 * std::max(a2, 1e-300))) break;
        }
    }
    return finish(s, a2, ll);
}

/// QML fit with the equal-spacing convention Delta = window / N.
inline QmlFit qml_fit_window(std::span<const double> returns, double window_length, const QmlOptions& opt = {}) {
    require(window_length > 0.0, ErrorCode::InvalidArgument, "window length must be positive");
    return qml_fit(returns, window_length / static_cast<double>(returns.size()), opt);
}

inline void require_orthonormal(const Eigen::MatrixXd& basis, double tol = 1e-8) {
    require(basis.rows() == basis.cols(), ErrorCode::NotOrthonormal, "basis must be square");
    const Eigen::MatrixXd gram = basis.transpose() * basis;
    const double dev = (gram - Eigen::MatrixXd::Identity(basis.rows(), basis.cols())).cwiseAbs().maxCoeff();
    require(basis.size() == 0 || dev <= tol, ErrorCode::NotOrthonormal, "basis deviates from orthonormality");
}

/// Returns of the rotated series u_i' Y, one row per basis vector.
inline Eigen::MatrixXd rotate_series(const sync::SyncPanel& panel, const Eigen::MatrixXd& basis) {
    require_orthonormal(basis);
    require(basis.rows() == panel.assets(), ErrorCode::InvalidArgument, "basis / panel dimension mismatch");
    const Eigen::MatrixXd rotated = basis.transpose() * panel.log_prices;
    const auto n = panel.returns();
    return rotated.rightCols(n) - rotated.leftCols(n);
}

} // namespace icv::qml
