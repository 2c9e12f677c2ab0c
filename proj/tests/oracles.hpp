#pragma once

// Independent reference computations shared by the unit tests and the acceptance run.

#include "olab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace olab::oracle {

// Dense grid over the ball, then projected gradient descent on ‖Lx + b‖² from the best node.
inline double grid_min_norm(const AffineMap& phi, const Vec& c, double r) {
    const int d = static_cast<int>(c.size());
    const int steps = d == 1 ? 2001 : d == 2 ? 201 : 41;
    Vec best = c;
    double best_v = phi.apply(c).norm();
    std::vector<int> idx(d, 0);
    while (true) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x(i) = c(i) - r + 2.0 * r * idx[i] / (steps - 1);
        if ((x - c).norm() <= r) {
            const double v = phi.apply(x).norm();
            if (v < best_v) best_v = v, best = x;
        }
        int k = 0;
        while (k < d && ++idx[k] == steps) idx[k++] = 0;
        if (k == d) break;
    }
    const double lip = std::pow(phi.linear.norm(), 2);
    Vec x = best;
    for (int it = 0; it < 60000; ++it) {
        x -= phi.linear.transpose() * phi.apply(x) / lip;
        if ((x - c).norm() > r) x = c + r * (x - c) / (x - c).norm();
    }
    return std::min(best_v, phi.apply(x).norm());
}

inline double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double worst = 0.0;
    for (const auto& p : a) {
        double best = INFINITY;
        for (const auto& q : b) best = std::min(best, (p - q).norm());
        worst = std::max(worst, best);
    }
    return worst;
}

inline double hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace olab::oracle
