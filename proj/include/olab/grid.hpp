#pragma once

#include "olab/linalg.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace olab {

// Uniform bucket grid over a fixed point list (CSR layout). Queries are exact.
class PointGrid {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    PointGrid() = default;
    PointGrid(const std::vector<Vec>& pts, double cell);

    // Cell side giving roughly `per_cell` points per occupied cell.
    static double suggest_cell(const std::vector<Vec>& pts, double per_cell = 2.0);

    std::size_t size() const { return pts_ ? pts_->size() : 0; }
    double cell() const { return cell_; }

    // Calls f(index) for every point with ‖p − c‖ ≤ r, in unspecified order.
    template <class F>
    void for_each_in_ball(const Vec& c, double r, F&& f) const;

    // Nearest point to c other than `exclude`; ties go to the smaller index.
    std::pair<std::size_t, double> nearest(const Vec& c, std::size_t exclude = npos) const;

private:
    using Cell = std::array<std::int64_t, kMaxDim>;

    Cell cell_of(const Vec& x) const;
    std::size_t linear(const Cell& c) const;

    template <class F>
    void visit_range(const Cell& lo, const Cell& hi, F&& f) const;

    const std::vector<Vec>* pts_ = nullptr;
    int d_ = 0;
    double cell_ = 1.0;
    Vec lo_;
    Cell dims_{};
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> index_;
};

template <class F>
void PointGrid::visit_range(const Cell& lo, const Cell& hi, F&& f) const {
    Cell cur = lo;
    while (true) {
        const std::size_t id = linear(cur);
        for (std::uint32_t k = start_[id]; k < start_[id + 1]; ++k) f(static_cast<std::size_t>(index_[k]));
        int ax = 0;
        while (ax < d_) {
            if (cur[ax] < hi[ax]) {
                ++cur[ax];
                break;
            }
            cur[ax] = lo[ax];
            ++ax;
        }
        if (ax == d_) break;
    }
}

template <class F>
void PointGrid::for_each_in_ball(const Vec& c, double r, F&& f) const {
    if (!pts_ || pts_->empty()) return;
    const auto& pts = *pts_;
    Cell lo{}, hi{};
    double cells = 1.0;
    // Padding keeps boundary points from being lost to rounding in the cell arithmetic.
    const double pad = r + 1e-13 * (r + c.cwiseAbs().maxCoeff() + lo_.cwiseAbs().maxCoeff());
    for (int i = 0; i < d_; ++i) {
        const double a = std::floor((c(i) - pad - lo_(i)) / cell_);
        const double b = std::floor((c(i) + pad - lo_(i)) / cell_);
        if (b < 0.0 || a > static_cast<double>(dims_[i] - 1)) return;
        lo[i] = a < 0.0 ? 0 : static_cast<std::int64_t>(a);
        hi[i] = b > static_cast<double>(dims_[i] - 1) ? dims_[i] - 1 : static_cast<std::int64_t>(b);
        cells *= static_cast<double>(hi[i] - lo[i] + 1);
    }
    auto check = [&](std::size_t k) {
        if ((pts[k] - c).norm() <= r) f(k);
    };
    if (cells > static_cast<double>(pts.size())) {
        for (std::size_t k = 0; k < pts.size(); ++k) check(k);
        return;
    }
    visit_range(lo, hi, check);
}

}  // namespace olab
