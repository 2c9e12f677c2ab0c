#include "olab/sampler.hpp"

#include "olab/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>

namespace olab {

Box PointCloud::bounding_box() const {
    if (points.empty()) return Box{Vec::Zero(dim), Vec::Zero(dim)};
    Box b{points.front(), points.front()};
    for (const auto& p : points) {
        b.lo = b.lo.cwiseMin(p);
        b.hi = b.hi.cwiseMax(p);
    }
    return b;
}

double PointCloud::diameter() const { return bounding_box().diameter(); }

PointCloud sample_word_tree(const IfsSystem& ifs, double delta, const Vec& base, std::size_t point_budget) {
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::Domain, "word-tree delta must lie in (0,1)");
    if (base.size() != ifs.dim()) fail(ErrorCode::Domain, "base point dimension mismatch");
    const Box box = attractor_box(ifs);
    if (!box.contains(base, 1e-9 * (1.0 + box.diameter())))
        fail(ErrorCode::Domain, "base point lies outside the attractor box");
    auto leaves = kernels::parallel::word_tree(ifs, delta, base, point_budget);
    if (leaves.over_budget)
        fail(ErrorCode::PointBudget, "word tree exceeds the point budget of " + std::to_string(point_budget) +
                                         " points; increase delta or the budget");
    PointCloud cloud;
    cloud.dim = ifs.dim();
    cloud.points = std::move(leaves.points);
    cloud.resolution = delta * box.diameter();
    cloud.provenance.method = "word-tree";
    cloud.provenance.min_depth = leaves.min_depth;
    cloud.provenance.max_depth = leaves.max_depth;
    return cloud;
}

PointCloud sample_word_tree(const IfsSystem& ifs, double delta, std::size_t point_budget) {
    return sample_word_tree(ifs, delta, ifs.map(0).fixed_point(), point_budget);
}

PointCloud sample_chaos_game(const IfsSystem& ifs, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, ifs.size() - 1);
    Vec x = ifs.map(0).fixed_point();
    for (int i = 0; i < 100; ++i) x = ifs.map(pick(rng)).apply(x);
    PointCloud cloud;
    cloud.dim = ifs.dim();
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        x = ifs.map(pick(rng)).apply(x);
        cloud.points.push_back(x);
    }
    cloud.resolution = std::numeric_limits<double>::quiet_NaN();
    cloud.provenance.method = "chaos-game";
    cloud.provenance.seed = seed;
    return cloud;
}

PointCloud map_cloud(const PointCloud& cloud, const Similarity& s) {
    PointCloud out = cloud;
    for (auto& p : out.points) p = s.apply(p);
    out.resolution = cloud.resolution * s.ratio;
    out.provenance.method = "image";
    return out;
}

PointCloud project_cloud(const PointCloud& cloud, const Mat& basis) {
    PointCloud out;
    out.dim = static_cast<int>(basis.cols());
    out.points.reserve(cloud.points.size());
    for (const auto& p : cloud.points) out.points.push_back(basis.transpose() * p);
    // Projections are 1-Lipschitz, so the density guarantee carries over.
    out.resolution = cloud.resolution;
    out.provenance = cloud.provenance;
    out.provenance.method = "projection";
    return out;
}

namespace {

using CellKey = std::array<std::int64_t, kMaxDim>;

struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (auto v : k) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

class NetBuilder {
public:
    NetBuilder(int d, double r) : d_(d), r_(r) {}

    // Adds p when it is at distance ≥ r from every kept point.
    bool offer(const Vec& p) {
        CellKey key{};
        for (int i = 0; i < d_; ++i) key[i] = static_cast<std::int64_t>(std::floor(p(i) / r_));
        CellKey cur{};
        int offs[kMaxDim];
        for (int i = 0; i < d_; ++i) offs[i] = -1;
        while (true) {
            for (int i = 0; i < d_; ++i) cur[i] = key[i] + offs[i];
            auto it = cells_.find(cur);
            if (it != cells_.end())
                for (auto k : it->second)
                    if ((kept_[k] - p).norm() < r_) return false;
            int ax = 0;
            while (ax < d_) {
                if (offs[ax] < 1) {
                    ++offs[ax];
                    break;
                }
                offs[ax] = -1;
                ++ax;
            }
            if (ax == d_) break;
        }
        cells_[key].push_back(static_cast<std::uint32_t>(kept_.size()));
        kept_.push_back(p);
        return true;
    }

    std::vector<Vec>& kept() { return kept_; }

private:
    int d_;
    double r_;
    std::vector<Vec> kept_;
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> cells_;
};

std::vector<std::size_t> lex_order(const std::vector<Vec>& pts) {
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lex_less(pts[a], pts[b]); });
    return idx;
}

}  // namespace

SeparatedNet separated_net(const std::vector<Vec>& points, double r) {
    if (!(r > 0.0)) fail(ErrorCode::Domain, "net radius must be positive");
    SeparatedNet net;
    net.r = r;
    if (points.empty()) return net;
    NetBuilder nb(static_cast<int>(points.front().size()), r);
    for (auto i : lex_order(points)) nb.offer(points[i]);
    net.centers = std::move(nb.kept());
    return net;
}

int local_covering_count(const std::vector<Vec>& points, const Vec& x, double R, double r) {
    if (!(r > 0.0 && r < R)) fail(ErrorCode::Domain, "local covering count needs 0 < r < R");
    std::vector<Vec> sub;
    for (const auto& p : points)
        if ((p - x).norm() <= R) sub.push_back(p);
    return static_cast<int>(separated_net(sub, r).centers.size());
}

CoveringCounter::CoveringCounter(const std::vector<Vec>& points, double query_radius_hint) {
    sorted_.reserve(points.size());
    for (auto i : lex_order(points)) sorted_.push_back(points[i]);
    double cell = query_radius_hint > 0.0 ? query_radius_hint : PointGrid::suggest_cell(sorted_);
    grid_ = PointGrid(sorted_, std::max(cell, PointGrid::suggest_cell(sorted_, 8.0)));
}

std::vector<std::uint32_t> CoveringCounter::ball(const Vec& x, double R) const {
    std::vector<std::uint32_t> out;
    grid_.for_each_in_ball(x, R, [&](std::size_t k) { out.push_back(static_cast<std::uint32_t>(k)); });
    std::sort(out.begin(), out.end());
    return out;
}

int CoveringCounter::net_size(const std::vector<std::uint32_t>& subset, double r) const {
    if (subset.empty()) return 0;
    NetBuilder nb(static_cast<int>(sorted_.front().size()), r);
    int n = 0;
    for (auto k : subset) n += nb.offer(sorted_[k]) ? 1 : 0;
    return n;
}

double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    if (a.empty() || b.empty()) fail(ErrorCode::Domain, "Hausdorff distance of an empty set");
    return kernels::parallel::directed_hausdorff(a, b);
}

double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

void write_cloud_csv(std::ostream& os, const std::vector<Vec>& pts, int dim) {
    for (int i = 0; i < dim; ++i) os << (i ? ",x" : "x") << i;
    os << '\n';
    char buf[40];
    for (const auto& p : pts) {
        for (int i = 0; i < dim; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", p(i));
            if (i) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud) {
    std::ofstream os(path);
    if (!os) fail(ErrorCode::Domain, "cannot write " + path);
    write_cloud_csv(os, cloud.points, cloud.dim);
}

void write_cloud_binary(const std::string& path, const PointCloud& cloud) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::Domain, "cannot write " + path);
    for (const auto& p : cloud.points)
        for (int i = 0; i < cloud.dim; ++i) {
            // Little-endian float64; the targets we build for are little-endian.
            double v = p(i);
            unsigned char bytes[8];
            std::memcpy(bytes, &v, 8);
            os.write(reinterpret_cast<const char*>(bytes), 8);
        }
}

PointCloud read_cloud_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::Domain, "cannot read " + path);
    std::string line;
    if (!std::getline(is, line)) fail(ErrorCode::Domain, "empty cloud file " + path);
    PointCloud cloud;
    cloud.dim = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    if (cloud.dim > kMaxDim) fail(ErrorCode::Domain, "cloud dimension above 4");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Vec p(cloud.dim);
        const char* s = line.c_str();
        for (int i = 0; i < cloud.dim; ++i) {
            char* end = nullptr;
            p(i) = std::strtod(s, &end);
            if (end == s) fail(ErrorCode::Domain, "malformed row in " + path);
            s = end + (*end == ',' ? 1 : 0);
        }
        cloud.points.push_back(p);
    }
    cloud.resolution = std::numeric_limits<double>::quiet_NaN();
    cloud.provenance.method = "import";
    return cloud;
}

PointCloud read_cloud_binary(const std::string& path, int dim) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::Domain, "cannot read " + path);
    PointCloud cloud;
    cloud.dim = dim;
    while (true) {
        Vec p(dim);
        for (int i = 0; i < dim; ++i) {
            unsigned char bytes[8];
            if (!is.read(reinterpret_cast<char*>(bytes), 8)) {
                if (i != 0) fail(ErrorCode::Domain, "truncated binary cloud " + path);
                cloud.resolution = std::numeric_limits<double>::quiet_NaN();
                cloud.provenance.method = "import";
                return cloud;
            }
            std::memcpy(&p(i), bytes, 8);
        }
        cloud.points.push_back(p);
    }
}

}  // namespace olab
