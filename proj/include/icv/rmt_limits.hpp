#pragma once

// Limiting spectral objects for sample-type covariance matrices with
// population spectrum H and dimension ratio y = p/n.
//
// s_F solves   s = int dH(t) / (t (1 - y - y z s) - z),   Im z > 0,
// and its boundary value on the real axis gives the density of F
// (Im / pi), the oracle shrinkage delta(v) = v / |1 - y - y v s(v)|^2 and
// Psi(x) = int_{-inf}^x delta dF. Support edges come from the critical
// points of  x(m) = -1/m + y int t dH(t) / (1 + t m)  on the real line.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "icv/detail/text.hpp"
#include "icv/error.hpp"
#include "icv/spectral.hpp"

namespace icv::rmt {

using cplx = std::complex<double>;

/// Finite mixture of point masses; weights are normalized to one.
struct PopulationSpectrum {
    std::vector<double> atoms;
    std::vector<double> weights;

    PopulationSpectrum() = default;
    PopulationSpectrum(std::vector<double> a, std::vector<double> w) : atoms(std::move(a)), weights(std::move(w)) {
        require(!atoms.empty() && atoms.size() == weights.size(), ErrorCode::InvalidArgument, "atoms/weights size mismatch");
        double total = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            require(atoms[k] > 0.0 && std::isfinite(atoms[k]), ErrorCode::InvalidArgument, "population atoms must be positive");
            require(weights[k] > 0.0, ErrorCode::InvalidArgument, "population weights must be positive");
            total += weights[k];
        }
        for (auto& w : weights) w /= total;
    }

    static PopulationSpectrum point(double c) { return {{c}, {1.0}}; }

    /// ESD of `values`; more than `max_atoms` distinct values are quantized
    /// into equal-mass groups represented by their means.
    static PopulationSpectrum from_eigenvalues(const Eigen::VectorXd& values, std::size_t max_atoms = 200) {
        std::vector<double> v(values.data(), values.data() + values.size());
        std::sort(v.begin(), v.end());
        std::map<double, double> exact;
        for (double x : v) exact[x] += 1.0;
        std::vector<double> a, w;
        if (exact.size() <= max_atoms) {
            for (const auto& [x, c] : exact) {
                a.push_back(x);
                w.push_back(c);
            }
            return {std::move(a), std::move(w)};
        }
        const std::size_t n = v.size();
        for (std::size_t g = 0; g < max_atoms; ++g) {
            const std::size_t lo = g * n / max_atoms, hi = (g + 1) * n / max_atoms;
            if (hi <= lo) continue;
            double s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) s += v[k];
            a.push_back(s / static_cast<double>(hi - lo));
            w.push_back(static_cast<double>(hi - lo));
        }
        return {std::move(a), std::move(w)};
    }

    [[nodiscard]] double mean() const {
        double m = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) m += atoms[k] * weights[k];
        return m;
    }
    [[nodiscard]] double max_atom() const { return *std::max_element(atoms.begin(), atoms.end()); }
    [[nodiscard]] double min_atom() const { return *std::min_element(atoms.begin(), atoms.end()); }
};

/// Right-hand side of the self-consistent equation.
inline cplx silverstein_rhs(const PopulationSpectrum& h, double y, cplx z, cplx s) {
    cplx acc = 0.0;
    const cplx k = 1.0 - y - y * z * s;
    for (std::size_t j = 0; j < h.atoms.size(); ++j) acc += h.weights[j] / (h.atoms[j] * k - z);
    return acc;
}

inline double silverstein_residual(const PopulationSpectrum& h, double y, cplx z, cplx s) {
    return std::abs(s - silverstein_rhs(h, y, z, s));
}

namespace detail {

inline constexpr int kMaxIterations = 10000;

inline bool on_branch(cplx s) { return s.imag() >= -1e-12 * std::max(1.0, std::abs(s)); }

// Newton on f(s) = s - rhs(s) from `s`; false if it fails to reach `tol`.
inline bool newton(const PopulationSpectrum& h, double y, cplx z, cplx& s, double tol) {
    for (int it = 0; it < 100; ++it) {
        const cplx k = 1.0 - y - y * z * s;
        cplx r = 0.0, dr = 0.0;
        for (std::size_t j = 0; j < h.atoms.size(); ++j) {
            const double t = h.atoms[j];
            const cplx den = t * k - z;
            r += h.weights[j] / den;
            dr += h.weights[j] * t * y * z / (den * den);
        }
        const cplx f = s - r;
        if (std::abs(f) <= tol * std::max(1.0, std::abs(s))) return std::isfinite(s.real()) && on_branch(s);
        cplx step = f / (1.0 - dr);
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return false;
        // stay in the upper half-plane when Im z > 0
        if (z.imag() > 0.0) {
            for (int k = 0; k < 60 && (s - step).imag() <= 0.0; ++k) step *= 0.5;
        }
        s -= step;
    }
    return false;
}

// Damped fixed-point iteration; the damping halves whenever the residual grows.
inline bool fixed_point(const PopulationSpectrum& h, double y, cplx z, cplx& s, double tol) {
    double omega = 0.5;
    double res = silverstein_residual(h, y, z, s);
    for (int it = 0; it < kMaxIterations; ++it) {
        if (res <= tol * std::max(1.0, std::abs(s))) return on_branch(s);
        const cplx next = (1.0 - omega) * s + omega * silverstein_rhs(h, y, z, s);
        const double r2 = silverstein_residual(h, y, z, next);
        if (r2 > res && omega > 1e-4) {
            omega *= 0.5;
            continue;
        }
        s = next;
        res = r2;
    }
    return false;
}

} // namespace detail

/// s_F(z) for Im z > 0, by continuation from Im z >= 1 down to the target.
inline cplx solve_stieltjes(const PopulationSpectrum& h, double y, cplx z, double tol = 1e-12) {
    require(y > 0.0 && std::isfinite(y), ErrorCode::InvalidArgument, "ratio y must be positive");
    require(z.imag() > 0.0, ErrorCode::InvalidArgument, "z must lie in the upper half-plane");
    double eta = std::max(z.imag(), 1.0);
    cplx s = 0.0;
    for (std::size_t j = 0; j < h.atoms.size(); ++j) s += h.weights[j] / (h.atoms[j] - cplx(z.real(), eta));
    bool first = true;
    double factor = 0.3;
    while (true) {
        const double next = first ? eta : std::max(z.imag(), eta * factor);
        const cplx zz(z.real(), next);
        cplx trial = s;
        if (detail::newton(h, y, zz, trial, tol)) {
            s = trial;
            eta = next;
            first = false;
            if (eta <= z.imag()) return s;
            factor = std::min(0.3, factor * 2.0);
            continue;
        }
        if (!first && factor < 0.999) {
            factor = std::sqrt(factor); // shorter continuation step
            continue;
        }
        trial = s;
        if (!detail::fixed_point(h, y, zz, trial, tol)) {
            fail(ErrorCode::StieltjesNoConverge, "z = " + icv::detail::fmt_double(z.real()) + " + " + icv::detail::fmt_double(next) + "i");
        }
        s = trial;
        eta = next;
        first = false;
        if (eta <= z.imag()) return s;
    }
}

struct BoundaryValue {
    cplx value;
    bool near_edge = false; // ladder extrapolations disagree: x sits close to a support edge
};

inline constexpr double kLadder[3] = {1e-2, 1e-3, 1e-4};

/// Boundary value lim_{eps -> 0} s_F(x + i eps) by two-point Richardson
/// extrapolation on the eps ladder.
inline BoundaryValue boundary_stieltjes(const PopulationSpectrum& h, double y, double x) {
    require(std::abs(y - 1.0) > 1e-12, ErrorCode::UnsupportedRatio, "boundary evaluation excludes y = 1");
    cplx s[3];
    for (int k = 0; k < 3; ++k) s[k] = solve_stieltjes(h, y, cplx(x, kLadder[k]));
    const auto extrapolate = [&](int a, int b) { return s[b] + (s[b] - s[a]) * (kLadder[b] / (kLadder[a] - kLadder[b])); };
    const cplx coarse = extrapolate(0, 1), fine = extrapolate(1, 2);
    BoundaryValue out;
    out.value = cplx(fine.real(), std::max(0.0, fine.imag()));
    // Newton on the real axis from the extrapolated value; kept only when it
    // lands on the same branch.
    cplx polished = out.value;
    if (detail::newton(h, y, cplx(x, 0.0), polished, 1e-13) && std::abs(polished - out.value) < 1e-3 * std::max(1.0, std::abs(out.value))) {
        out.value = cplx(polished.real(), std::abs(polished.imag()));
    }
    out.near_edge = std::abs(coarse - fine) > 1e-3 * std::max(1.0, std::abs(fine));
    return out;
}

/// Oracle shrinkage delta(v) = v / |1 - y - y v s(v)|^2.
inline double delta_function(const PopulationSpectrum& h, double y, double v) {
    require(v > 0.0, ErrorCode::InvalidArgument, "delta needs v > 0");
    const cplx m = boundary_stieltjes(h, y, v).value;
    return v / std::norm(1.0 - y - y * v * m);
}

/// Optimal shrinkage function; same formula as delta_function.
inline double optimal_g(const PopulationSpectrum& h, double y, double x) { return delta_function(h, y, x); }

/// Psi_p(x) = (1/p) sum_i u_i' Sigma u_i 1{v_i <= x}.
inline double psi_empirical(const spectral::EigenSystem& s, const Eigen::MatrixXd& sigma_true, double x) {
    const auto p = s.values.size();
    require(p >= 1 && sigma_true.rows() == p && sigma_true.cols() == p, ErrorCode::InvalidArgument, "dimension mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (s.values(i) <= x) acc += s.vectors.col(i).dot(sigma_true * s.vectors.col(i));
    }
    return acc / static_cast<double>(p);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct Integral {
    double value = 0.0;
    double error = 0.0;
};

/// LSD F of a sample covariance with population H and ratio y.
class SpectralLimit {
public:
    SpectralLimit(PopulationSpectrum h, double y) : h_(std::move(h)), y_(y) {
        require(y_ > 0.0 && std::isfinite(y_), ErrorCode::InvalidArgument, "ratio y must be positive");
        require(std::abs(y_ - 1.0) > 1e-12, ErrorCode::UnsupportedRatio, "y = 1 is excluded");
        locate_support();
    }

    [[nodiscard]] const PopulationSpectrum& population() const noexcept { return h_; }
    [[nodiscard]] double ratio() const noexcept { return y_; }
    [[nodiscard]] const std::vector<Interval>& support() const noexcept { return support_; }
    /// Mass of F at zero (positive only when y > 1).
    [[nodiscard]] double atom_at_zero() const noexcept { return y_ > 1.0 ? 1.0 - 1.0 / y_ : 0.0; }

    [[nodiscard]] cplx stieltjes(cplx z) const { return solve_stieltjes(h_, y_, z); }
    [[nodiscard]] BoundaryValue boundary(double x) const { return boundary_stieltjes(h_, y_, x); }

    [[nodiscard]] bool in_support(double x) const {
        return std::any_of(support_.begin(), support_.end(), [&](const Interval& iv) { return x > iv.lo && x < iv.hi; });
    }

    /// Density of the continuous part of F; zero off the support.
    [[nodiscard]] double density(double x) const {
        if (!in_support(x)) return 0.0;
        return boundary(x).value.imag() / std::numbers::pi;
    }

    [[nodiscard]] double delta(double v) const { return delta_function(h_, y_, v); }

    /// int phi dF over the continuous part restricted to (-inf, upper].
    [[nodiscard]] Integral integrate(const std::function<double(double)>& phi, double upper = INFINITY) const {
        Integral total;
        for (const auto& iv : support_) {
            const double b = std::min(iv.hi, upper);
            if (b <= iv.lo) continue;
            const auto part = integrate_on(phi, iv.lo, b);
            total.value += part.value;
            total.error += part.error;
        }
        return total;
    }

    /// F(x), including the atom at zero when y > 1.
    [[nodiscard]] double cdf(double x) const {
        const double atom = x >= 0.0 ? atom_at_zero() : 0.0;
        return atom + integrate([](double) { return 1.0; }, x).value;
    }

    /// Psi(x) = int_{-inf}^x delta dF.
    [[nodiscard]] double psi(double x) const {
        return integrate([this](double v) { return delta(v); }, x).value;
    }

    /// Psi at sorted points, integrating each piece once.
    [[nodiscard]] std::vector<double> psi_cumulative(std::vector<double> xs) const {
        std::sort(xs.begin(), xs.end());
        std::vector<double> out;
        double acc = 0.0, prev = -INFINITY;
        const auto phi = [this](double v) { return delta(v); };
        for (double x : xs) {
            for (const auto& iv : support_) {
                const double a = std::max(iv.lo, prev), b = std::min(iv.hi, x);
                if (b > a) acc += integrate_on(phi, a, b).value;
            }
            out.push_back(acc);
            prev = x;
        }
        return out;
    }

private:
    [[nodiscard]] Integral integrate_on(const std::function<double(double)>& phi, double a, double b) const {
        Integral r;
        // x = a + (b - a)(1 - cos t)/2 smooths the square-root behaviour at the edges
        const double half = 0.5 * (b - a);
        const auto f = [&](double t) {
            const double x = a + half * (1.0 - std::cos(t));
            if (x <= a || x >= b) return 0.0;
            return phi(x) * boundary(x).value.imag() / std::numbers::pi * half * std::sin(t);
        };
        r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, std::numbers::pi, 12, 1e-8, &r.error);
        return r;
    }

    [[nodiscard]] double x_of_m(double m) const {
        double acc = -1.0 / m;
        for (std::size_t j = 0; j < h_.atoms.size(); ++j) acc += y_ * h_.weights[j] * h_.atoms[j] / (1.0 + h_.atoms[j] * m);
        return acc;
    }
    [[nodiscard]] double dx_of_m(double m) const {
        double acc = 1.0 / (m * m);
        for (std::size_t j = 0; j < h_.atoms.size(); ++j) {
            const double d = 1.0 + h_.atoms[j] * m;
            acc -= y_ * h_.weights[j] * h_.atoms[j] * h_.atoms[j] / (d * d);
        }
        return acc;
    }

    void locate_support() {
        // Poles of x(m): -1/t for each atom, and 0.
        std::vector<double> poles;
        for (double t : h_.atoms) poles.push_back(-1.0 / t);
        poles.push_back(0.0);
        std::sort(poles.begin(), poles.end());
        poles.erase(std::unique(poles.begin(), poles.end()), poles.end());

        constexpr int kSamples = 2000;
        std::vector<double> edges;
        const auto scan = [&](const std::function<double(double)>& at) {
            double prev_m = at(1.0 / kSamples), prev_d = dx_of_m(prev_m);
            for (int k = 2; k < kSamples; ++k) {
                const double m = at(static_cast<double>(k) / kSamples);
                const double d = dx_of_m(m);
                if (std::isfinite(d) && std::isfinite(prev_d) && (d > 0.0) != (prev_d > 0.0)) {
                    double lo = prev_m, hi = m;
                    const bool lo_pos = prev_d > 0.0;
                    for (int it = 0; it < 200; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (mid == lo || mid == hi) break;
                        ((dx_of_m(mid) > 0.0) == lo_pos ? lo : hi) = mid;
                    }
                    edges.push_back(x_of_m(0.5 * (lo + hi)));
                }
                prev_m = m;
                prev_d = d;
            }
        };
        const double p0 = poles.front();
        scan([&](double u) { return p0 - std::abs(p0) * std::tan(0.5 * std::numbers::pi * u); });
        for (std::size_t k = 0; k + 1 < poles.size(); ++k) {
            const double a = poles[k], b = poles[k + 1];
            scan([&](double u) { return a + (b - a) * 0.5 * (1.0 - std::cos(std::numbers::pi * u)); });
        }
        const double scale = 1.0 / h_.mean();
        scan([&](double u) { return scale * std::tan(0.5 * std::numbers::pi * u); });

        std::erase_if(edges, [](double e) { return !(e > 0.0) || !std::isfinite(e); });
        std::sort(edges.begin(), edges.end());
        std::vector<double> uniq;
        for (double e : edges) {
            if (uniq.empty() || e - uniq.back() > 1e-12 * std::max(1.0, e)) uniq.push_back(e);
        }
        for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
            const double mid = 0.5 * (uniq[k] + uniq[k + 1]);
            if (boundary(mid).value.imag() / std::numbers::pi > 1e-6) {
                if (!support_.empty() && support_.back().hi == uniq[k]) {
                    support_.back().hi = uniq[k + 1];
                } else {
                    support_.push_back({uniq[k], uniq[k + 1]});
                }
            }
        }
        require(!support_.empty(), ErrorCode::StieltjesNoConverge, "failed to locate the support of F");
    }

    PopulationSpectrum h_;
    double y_;
    std::vector<Interval> support_;
};

inline double psi_limit(const SpectralLimit& f, double x) { return f.psi(x); }

struct LimitLoss {
    double value = 0.0;
    double error = 0.0;
    std::vector<std::string> warnings;
};

/// Limiting (p-scaled) out-of-sample GMV loss of the rotation-equivariant
/// estimator with shrinkage function g:
///     int delta / g^2 dF  /  (int dF / g)^2.
inline LimitLoss limit_loss(const SpectralLimit& f, const std::function<double(double)>& g) {
    require(f.ratio() < 1.0, ErrorCode::UnsupportedRatio, "limit loss requires y < 1");
    const auto num = f.integrate([&](double x) {
        const double gx = g(x);
        return f.delta(x) / (gx * gx);
    });
    const auto den = f.integrate([&](double x) { return 1.0 / g(x); });
    LimitLoss out;
    out.value = num.value / (den.value * den.value);
    const double rel = num.error / std::max(std::abs(num.value), 1e-300) + 2.0 * den.error / std::max(std::abs(den.value), 1e-300);
    out.error = rel * std::abs(out.value);
    if (rel > 1e-4) out.warnings.push_back("EdgeQuadratureWarning: relative error " + icv::detail::fmt_double(rel));
    return out;
}

inline LimitLoss limit_loss(const PopulationSpectrum& h, double y, const std::function<double(double)>& g) {
    return limit_loss(SpectralLimit(h, y), g);
}

/// Table of x, F(x), Psi(x), delta(x), g(x) at the given points (g = delta).
inline void write_table(std::ostream& out, const SpectralLimit& f, const std::vector<double>& xs) {
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const auto psi = f.psi_cumulative(sorted);
    out << "x,F,psi,delta,g\n";
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double x = sorted[k];
        const double d = x > 0.0 ? f.delta(x) : 0.0;
        out << icv::detail::fmt_double(x) << ',' << icv::detail::fmt_double(f.cdf(x)) << ',' << icv::detail::fmt_double(psi[k]) << ','
            << icv::detail::fmt_double(d) << ',' << icv::detail::fmt_double(d) << '\n';
    }
}

} // namespace icv::rmt
