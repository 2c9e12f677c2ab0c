#pragma once

#include "olab/geometry.hpp"

#include <Eigen/QR>

#include <cstdint>
#include <random>

namespace olab::test {

inline Vec random_vec(std::mt19937_64& rng, int d, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = u(rng);
    return v;
}

inline Mat random_orthogonal(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    return Mat(q);
}

inline Similarity random_similarity(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> c(0.05, 0.9);
    return Similarity(c(rng), random_orthogonal(rng, d), random_vec(rng, d));
}

}  // namespace olab::test
