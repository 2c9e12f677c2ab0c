#pragma once

#include "olab/geometry.hpp"
#include "olab/grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace olab {

struct Provenance {
    std::string method = "word-tree";  // word-tree | chaos-game | projection | import | image
    std::uint64_t seed = 0;
    int min_depth = 0;
    int max_depth = 0;
};

struct PointCloud {
    int dim = 0;
    std::vector<Vec> points;
    // Every point of the sampled set lies within `resolution` of the cloud.
    // NaN when no such guarantee exists (chaos game).
    double resolution = 0.0;
    Provenance provenance;

    std::size_t size() const { return points.size(); }
    Box bounding_box() const;
    double diameter() const;
};

inline constexpr std::size_t kDefaultPointBudget = 10'000'000;

// Leaves of the prefix-free word set {α : c_α ≤ δ < c_parent(α)} mapped to S_α(base),
// in lexicographic word order.
PointCloud sample_word_tree(const IfsSystem& ifs, double delta, const Vec& base,
                            std::size_t point_budget = kDefaultPointBudget);
PointCloud sample_word_tree(const IfsSystem& ifs, double delta,
                            std::size_t point_budget = kDefaultPointBudget);

PointCloud sample_chaos_game(const IfsSystem& ifs, std::size_t n, std::uint64_t seed);

// S(cloud) for a similarity S; resolution scales with the ratio.
PointCloud map_cloud(const PointCloud& cloud, const Similarity& s);

// Orthogonal projection onto the span of the (orthonormal) columns of `basis`,
// expressed in those coordinates.
PointCloud project_cloud(const PointCloud& cloud, const Mat& basis);

struct SeparatedNet {
    std::vector<Vec> centers;
    double r = 0.0;
};

SeparatedNet separated_net(const std::vector<Vec>& points, double r);

int local_covering_count(const std::vector<Vec>& points, const Vec& x, double R, double r);

// Repeated local counts on one cloud: points are pre-sorted and bucketed once.
class CoveringCounter {
public:
    CoveringCounter(const std::vector<Vec>& points, double query_radius_hint);

    // Indices (into sorted()) of points in the closed ball, ascending.
    std::vector<std::uint32_t> ball(const Vec& x, double R) const;
    // Size of the greedy r-net of the given subset (indices ascending = lexicographic).
    int net_size(const std::vector<std::uint32_t>& subset, double r) const;
    int count(const Vec& x, double R, double r) const { return net_size(ball(x, R), r); }

    const std::vector<Vec>& sorted() const { return sorted_; }

private:
    std::vector<Vec> sorted_;
    PointGrid grid_;
};

double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b);
double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);

void write_cloud_csv(std::ostream& os, const std::vector<Vec>& pts, int dim);
void write_cloud_csv(const std::string& path, const PointCloud& cloud);
void write_cloud_binary(const std::string& path, const PointCloud& cloud);
PointCloud read_cloud_csv(const std::string& path);
PointCloud read_cloud_binary(const std::string& path, int dim);

}  // namespace olab
