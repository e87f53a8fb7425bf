#pragma once

// Class-C diffusions dX = mu dt + gamma_t Lambda dB observed with additive
// IID noise and (optionally) asynchronous Poisson trading. Every simulation
// carries its exact integrated covariance so estimators can be checked
// against ground truth.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "icv/detail/rng.hpp"
#include "icv/error.hpp"
#include "icv/ingest.hpp"

namespace icv::simulate {

/// Piecewise-constant gamma: values[k] on [breaks[k], breaks[k+1]), the last
/// value extends to +inf and values[0] also covers t < breaks[0].
class GammaPath {
public:
    GammaPath() : GammaPath(1.0) {}
    explicit GammaPath(double constant) : breaks_{0.0}, values_{constant} {}
    GammaPath(std::vector<double> breaks, std::vector<double> values) : breaks_(std::move(breaks)), values_(std::move(values)) {
        require(!breaks_.empty() && breaks_.size() == values_.size(), ErrorCode::InvalidModel, "gamma breaks/values size mismatch");
        require(std::adjacent_find(breaks_.begin(), breaks_.end(), std::greater_equal<>()) == breaks_.end(),
                ErrorCode::InvalidModel, "gamma breaks must be strictly increasing");
    }

    /// gamma = first on [0, split), second from split on.
    static GammaPath two_piece(double first, double second, double split) { return GammaPath({0.0, split}, {first, second}); }

    [[nodiscard]] double operator()(double t) const {
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
        const auto k = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
        return values_[k];
    }

    /// Exact integral of gamma^2 over [a, b].
    [[nodiscard]] double integral_sq(double a, double b) const {
        if (b <= a) return 0.0;
        double total = 0.0;
        const auto first = std::upper_bound(breaks_.begin(), breaks_.end(), a);
        const std::size_t k0 = first == breaks_.begin() ? 0 : static_cast<std::size_t>(first - breaks_.begin()) - 1;
        for (std::size_t k = k0; k < values_.size(); ++k) {
            if (breaks_[k] >= b && k > 0) break;
            const double lo = k == 0 ? -INFINITY : breaks_[k];
            const double hi = k + 1 < breaks_.size() ? breaks_[k + 1] : INFINITY;
            const double l = std::max(a, lo), h = std::min(b, hi);
            if (h > l) total += values_[k] * values_[k] * (h - l);
        }
        return total;
    }

    [[nodiscard]] double min_abs() const {
        double m = INFINITY;
        for (double v : values_) m = std::min(m, std::abs(v));
        return m;
    }
    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    [[nodiscard]] const std::vector<double>& breaks() const noexcept { return breaks_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> breaks_;
    std::vector<double> values_;
};

struct ClassCModel {
    Eigen::MatrixXd lambda;                          // p x p, tr(lambda lambda') = p
    GammaPath gamma;
    std::function<Eigen::VectorXd(double)> drift;    // empty means zero drift
    Eigen::MatrixXd noise_cov;                       // A0; empty means no noise
    double c0 = 1e6;                                 // gamma must stay in (1/c0, c0)
    std::uint64_t seed = 1;

    [[nodiscard]] Eigen::Index p() const noexcept { return lambda.rows(); }
    [[nodiscard]] Eigen::MatrixXd lambda_cov() const { return lambda * lambda.transpose(); }
};

/// Symmetric square root of a PSD matrix via its eigendecomposition
/// (negative round-off eigenvalues clamp to zero).
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

inline void validate(const ClassCModel& m) {
    const auto p = m.p();
    require(p >= 1 && m.lambda.cols() == p, ErrorCode::InvalidModel, "lambda must be square and non-empty");
    const double tr = m.lambda.squaredNorm();
    require(std::abs(tr - static_cast<double>(p)) <= 1e-10 * static_cast<double>(p), ErrorCode::InvalidModel,
            "tr(lambda lambda') must equal p");
    require(m.c0 > 1.0, ErrorCode::InvalidModel, "c0 must exceed 1");
    require(m.gamma.min_abs() > 1.0 / m.c0 && m.gamma.max_abs() < m.c0, ErrorCode::InvalidModel,
            "gamma must stay inside (1/c0, c0)");
    if (m.noise_cov.size() == 0) return;
    require(m.noise_cov.rows() == p && m.noise_cov.cols() == p, ErrorCode::InvalidNoiseCov, "noise covariance must be p x p");
    const double scale = std::max(1e-300, m.noise_cov.cwiseAbs().maxCoeff());
    require((m.noise_cov - m.noise_cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, ErrorCode::InvalidNoiseCov,
            "noise covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.noise_cov, Eigen::EigenvaluesOnly);
    require(es.eigenvalues()(0) >= -1e-12 * scale, ErrorCode::InvalidNoiseCov, "noise covariance not PSD");
}

/// Rescales so that tr(L L') = p.
inline Eigen::MatrixXd normalize_trace(Eigen::MatrixXd lambda) {
    const double tr = lambda.squaredNorm();
    require(tr > 0.0, ErrorCode::InvalidModel, "lambda is zero");
    lambda *= std::sqrt(static_cast<double>(lambda.rows()) / tr);
    return lambda;
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign correction).
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index p, detail::Rng& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd g(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) g(i, j) = z(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

/// Lambda = P diag(sqrt(eig)) with Haar P, eigenvalues rescaled to mean one.
/// `eigenvalues` lists the spectrum of lambda lambda' (any positive scale).
inline Eigen::MatrixXd lambda_from_spectrum(const Eigen::VectorXd& eigenvalues, detail::Rng& rng) {
    require(eigenvalues.size() >= 1 && (eigenvalues.array() > 0.0).all(), ErrorCode::InvalidModel,
            "spectrum must be positive");
    const Eigen::VectorXd e = eigenvalues * (static_cast<double>(eigenvalues.size()) / eigenvalues.sum());
    return normalize_trace(haar_orthogonal(eigenvalues.size(), rng) * e.cwiseSqrt().asDiagonal());
}

/// Spectrum with atoms repeated in proportion to their weights (rounded,
/// remainder to the last atom).
inline Eigen::VectorXd spectrum_from_mixture(Eigen::Index p, const std::vector<double>& atoms, const std::vector<double>& weights) {
    require(!atoms.empty() && atoms.size() == weights.size(), ErrorCode::InvalidModel, "atoms/weights size mismatch");
    Eigen::VectorXd out(p);
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        auto count = k + 1 == atoms.size() ? p - at : static_cast<Eigen::Index>(std::llround(weights[k] * static_cast<double>(p)));
        count = std::min(count, p - at);
        out.segment(at, count).setConstant(atoms[k]);
        at += count;
    }
    return out;
}

/// Correlation rho between every pair, per-asset vols exp(s * z_i) with the
/// given log-dispersion s; rescaled to tr = p.
inline Eigen::MatrixXd lambda_equicorrelation(Eigen::Index p, double rho, double vol_dispersion, detail::Rng& rng) {
    require(rho > -1.0 / static_cast<double>(std::max<Eigen::Index>(p - 1, 1)) && rho < 1.0, ErrorCode::InvalidModel,
            "rho out of range");
    std::normal_distribution<double> z;
    Eigen::VectorXd vol(p);
    for (Eigen::Index i = 0; i < p; ++i) vol(i) = std::exp(vol_dispersion * z(rng));
    Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(p, p, rho);
    corr.diagonal().setOnes();
    const Eigen::MatrixXd cov = vol.asDiagonal() * corr * vol.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    return normalize_trace(llt.matrixL());
}

/// Exact integrated covariance over [a, b]: (int gamma^2) * Lambda Lambda'.
inline Eigen::MatrixXd true_icv(const ClassCModel& m, double a, double b) {
    require(b >= a, ErrorCode::InvalidArgument, "window end precedes start");
    return m.gamma.integral_sq(a, b) * m.lambda_cov();
}

/// Increments of the latent path between consecutive `times`; each column is
/// exactly N(drift*dt, int gamma^2 * Lambda Lambda') for piecewise-constant gamma.
inline Eigen::MatrixXd sample_increments(const ClassCModel& m, const std::vector<double>& times, detail::Rng& rng) {
    const auto p = m.p();
    const auto n = times.size() < 2 ? Eigen::Index{0} : static_cast<Eigen::Index>(times.size() - 1);
    Eigen::MatrixXd z(p, n);
    std::normal_distribution<double> normal;
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index i = 0; i < p; ++i) z(i, k) = normal(rng);
    }
    Eigen::MatrixXd inc = m.lambda * z;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double a = times[static_cast<std::size_t>(k)], b = times[static_cast<std::size_t>(k) + 1];
        inc.col(k) *= std::sqrt(m.gamma.integral_sq(a, b));
        if (m.drift) inc.col(k) += m.drift(a) * (b - a);
    }
    return inc;
}

/// IID noise vectors N(0, A0), one per column.
inline Eigen::MatrixXd sample_noise(const ClassCModel& m, Eigen::Index columns, detail::Rng& rng) {
    const auto p = m.p();
    if (m.noise_cov.size() == 0) return Eigen::MatrixXd::Zero(p, columns);
    const Eigen::MatrixXd root = psd_sqrt(m.noise_cov);
    Eigen::MatrixXd z(p, columns);
    std::normal_distribution<double> normal;
    for (Eigen::Index k = 0; k < columns; ++k) {
        for (Eigen::Index i = 0; i < p; ++i) z(i, k) = normal(rng);
    }
    return root * z;
}

struct TickOptions {
    bool emit_ticks = false;
    std::vector<double> intensity; // expected ticks per unit time, per asset (one value = all assets)
    ingest::Session session;       // [t0, t0 + horizon] maps onto the session
    std::vector<std::string> symbols;
    bool open_close_prints = false; // always trade at the first and last fine point
};

struct TruePathRecord {
    std::vector<double> times;           // fine grid t0 .. t0 + horizon
    Eigen::MatrixXd latent;              // p x (steps + 1)
    Eigen::MatrixXd observed;            // latent + noise
    std::vector<ingest::TickSeries> ticks;
    double window_start = 0.0;
    double window_end = 0.0;
    Eigen::MatrixXd icv;                 // exact ICV over the window
};

inline std::string default_symbol(Eigen::Index i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "A%03d", static_cast<int>(i));
    return buf;
}

/// Simulates `fine_steps` increments over [t0, t0 + horizon] starting from x0
/// (zero when empty). With tick emission, each asset trades at a fine point
/// with probability 1 - exp(-intensity * dt) and records the observed price.
inline TruePathRecord simulate_paths(const ClassCModel& m, Eigen::Index fine_steps, double horizon, const TickOptions& ticks = {},
                                     double t0 = 0.0, const Eigen::VectorXd& x0 = {}) {
    validate(m);
    require(fine_steps >= 1, ErrorCode::InvalidArgument, "fine_steps must be >= 1");
    require(horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be positive");
    const auto p = m.p();
    detail::Rng rng(m.seed);

    TruePathRecord rec;
    rec.window_start = t0;
    rec.window_end = t0 + horizon;
    rec.times.resize(static_cast<std::size_t>(fine_steps) + 1);
    for (Eigen::Index k = 0; k <= fine_steps; ++k) {
        rec.times[static_cast<std::size_t>(k)] = t0 + horizon * static_cast<double>(k) / static_cast<double>(fine_steps);
    }
    rec.times.back() = t0 + horizon;

    const Eigen::MatrixXd inc = sample_increments(m, rec.times, rng);
    rec.latent.resize(p, fine_steps + 1);
    rec.latent.col(0) = x0.size() == p ? x0 : Eigen::VectorXd::Zero(p);
    for (Eigen::Index k = 0; k < fine_steps; ++k) rec.latent.col(k + 1) = rec.latent.col(k) + inc.col(k);
    rec.observed = rec.latent + sample_noise(m, fine_steps + 1, rng);
    rec.icv = true_icv(m, rec.window_start, rec.window_end);

    if (!ticks.emit_ticks) return rec;
    require(ticks.intensity.size() == 1 || static_cast<Eigen::Index>(ticks.intensity.size()) == p, ErrorCode::InvalidArgument,
            "intensity must have one entry or one per asset");
    const double dt = horizon / static_cast<double>(fine_steps);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    rec.ticks.resize(static_cast<std::size_t>(p));
    const auto session_len = ticks.session.length();
    for (Eigen::Index i = 0; i < p; ++i) {
        auto& s = rec.ticks[static_cast<std::size_t>(i)];
        s.symbol = static_cast<Eigen::Index>(ticks.symbols.size()) == p ? ticks.symbols[static_cast<std::size_t>(i)] : default_symbol(i);
        s.session = ticks.session;
        const double lam = ticks.intensity.size() == 1 ? ticks.intensity[0] : ticks.intensity[static_cast<std::size_t>(i)];
        const double prob = 1.0 - std::exp(-lam * dt);
        for (Eigen::Index k = 0; k <= fine_steps; ++k) {
            const bool forced = ticks.open_close_prints && (k == 0 || k == fine_steps);
            if (u(rng) >= prob && !forced) continue;
            const auto ns = static_cast<ingest::Nanos>(std::llround(static_cast<double>(session_len) * static_cast<double>(k) /
                                                                     static_cast<double>(fine_steps)));
            if (!s.times.empty() && ns <= s.times.back()) continue;
            s.times.push_back(ns);
            s.log_prices.push_back(rec.observed(i, k));
        }
    }
    return rec;
}

} // namespace icv::simulate
