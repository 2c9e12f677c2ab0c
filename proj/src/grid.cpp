#include "olab/grid.hpp"

#include "olab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace olab {

PointGrid::PointGrid(const std::vector<Vec>& pts, double cell) : pts_(&pts) {
    if (pts.empty()) return;
    if (pts.size() >= std::numeric_limits<std::uint32_t>::max())
        fail(ErrorCode::Domain, "point grid supports fewer than 2^32 points");
    d_ = static_cast<int>(pts.front().size());
    lo_ = pts.front();
    Vec hi = pts.front();
    for (const auto& p : pts) {
        lo_ = lo_.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    double ext = (hi - lo_).maxCoeff();
    if (!(cell > 0.0) || !std::isfinite(cell)) cell = ext > 0.0 ? ext : 1.0;
    const double cap = std::max(64.0, 4.0 * static_cast<double>(pts.size()));
    while (true) {
        double total = 1.0;
        for (int i = 0; i < d_; ++i) total *= std::floor((hi(i) - lo_(i)) / cell) + 1.0;
        if (total <= cap) break;
        cell *= 1.5;
    }
    cell_ = cell;
    dims_.fill(1);
    std::size_t total = 1;
    for (int i = 0; i < d_; ++i) {
        dims_[i] = static_cast<std::int64_t>(std::floor((hi(i) - lo_(i)) / cell_)) + 1;
        total *= static_cast<std::size_t>(dims_[i]);
    }
    start_.assign(total + 1, 0);
    std::vector<std::uint32_t> ids(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        ids[k] = static_cast<std::uint32_t>(linear(cell_of(pts[k])));
        ++start_[ids[k] + 1];
    }
    for (std::size_t i = 0; i < total; ++i) start_[i + 1] += start_[i];
    index_.resize(pts.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t k = 0; k < pts.size(); ++k) index_[fill[ids[k]]++] = static_cast<std::uint32_t>(k);
}

double PointGrid::suggest_cell(const std::vector<Vec>& pts, double per_cell) {
    if (pts.empty()) return 1.0;
    Vec lo = pts.front(), hi = pts.front();
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec ext = hi - lo;
    const double emax = ext.maxCoeff();
    if (!(emax > 0.0)) return 1.0;
    // Axes with negligible extent do not count toward the effective dimension.
    int deff = 0;
    double vol = 1.0;
    for (int i = 0; i < ext.size(); ++i)
        if (ext(i) > 1e-9 * emax) {
            ++deff;
            vol *= ext(i);
        }
    const double n = std::max(1.0, static_cast<double>(pts.size()) / per_cell);
    return std::pow(vol / n, 1.0 / deff);
}

PointGrid::Cell PointGrid::cell_of(const Vec& x) const {
    Cell c{};
    for (int i = 0; i < d_; ++i) {
        const double f = std::floor((x(i) - lo_(i)) / cell_);
        if (f < 0.0) c[i] = 0;
        else if (f > static_cast<double>(dims_[i] - 1)) c[i] = dims_[i] - 1;
        else c[i] = static_cast<std::int64_t>(f);
    }
    return c;
}

std::size_t PointGrid::linear(const Cell& c) const {
    std::size_t id = 0;
    for (int i = d_ - 1; i >= 0; --i) id = id * static_cast<std::size_t>(dims_[i]) + static_cast<std::size_t>(c[i]);
    return id;
}

std::pair<std::size_t, double> PointGrid::nearest(const Vec& c, std::size_t exclude) const {
    std::size_t best = npos;
    double best_d = std::numeric_limits<double>::infinity();
    if (!pts_ || pts_->empty()) return {best, best_d};
    const auto& pts = *pts_;
    const Cell base = cell_of(c);
    std::int64_t kmax = 0;
    for (int i = 0; i < d_; ++i) kmax = std::max(kmax, dims_[i]);
    auto consider = [&](std::size_t k) {
        if (k == exclude) return;
        const double dist = (pts[k] - c).norm();
        if (dist < best_d || (dist == best_d && k < best)) {
            best_d = dist;
            best = k;
        }
    };
    for (std::int64_t k = 0; k <= kmax; ++k) {
        Cell lo{}, hi{};
        for (int i = 0; i < d_; ++i) {
            lo[i] = std::max<std::int64_t>(0, base[i] - k);
            hi[i] = std::min<std::int64_t>(dims_[i] - 1, base[i] + k);
        }
        Cell cur = lo;
        while (true) {
            bool on_ring = false;
            for (int i = 0; i < d_; ++i)
                if (std::llabs(cur[i] - base[i]) == k) on_ring = true;
            if (on_ring) {
                const std::size_t id = linear(cur);
                for (std::uint32_t q = start_[id]; q < start_[id + 1]; ++q) consider(index_[q]);
            }
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
        // Anything in ring k+1 is at least k cells away.
        if (best != npos && best_d < static_cast<double>(k) * cell_) break;
    }
    return {best, best_d};
}

}  // namespace olab
