#pragma once

#include <Eigen/Dense>

#include <random>

#include "icv/detail/rng.hpp"

namespace icv::test {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, detail::Rng& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
    }
    return m;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index p, detail::Rng& rng) {
    const Eigen::MatrixXd g = random_matrix(p, p, rng);
    return 0.5 * (g + g.transpose());
}

/// Well-conditioned random SPD matrix.
inline Eigen::MatrixXd random_spd(Eigen::Index p, detail::Rng& rng, double ridge = 0.5) {
    const Eigen::MatrixXd g = random_matrix(p, p, rng);
    Eigen::MatrixXd s = g * g.transpose() / static_cast<double>(p);
    s.diagonal().array() += ridge;
    return s;
}

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

} // namespace icv::test
