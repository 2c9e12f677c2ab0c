#pragma once

#include "olab/geometry.hpp"
#include "olab/sampler.hpp"
#include "olab/wsp.hpp"

#include <string>
#include <utility>
#include <vector>

namespace olab {

struct GdEdge {
    int from = 0;  // 0-based vertex
    int to = 0;
    Similarity map;
};

// F_i = ⋃_{e: i→j} S_e(F_j).
class GdSystem {
public:
    GdSystem() = default;
    GdSystem(int vertices, std::vector<GdEdge> edges, std::vector<std::string> labels = {});

    int vertices() const { return q_; }
    int dim() const { return dim_; }
    const std::vector<GdEdge>& edges() const { return edges_; }
    const std::vector<std::string>& labels() const { return labels_; }
    // Every edge map as one alphabet; words over it are edge paths.
    IfsSystem edge_alphabet() const;

private:
    int q_ = 0;
    int dim_ = 0;
    std::vector<GdEdge> edges_;
    std::vector<std::string> labels_;
};

struct SccResult {
    bool strongly_connected = false;
    std::vector<std::vector<int>> components;  // each sorted, ordered by smallest vertex
    std::vector<int> component_of;
};

SccResult strongly_connected(int vertices, const std::vector<std::pair<int, int>>& arcs);
SccResult strongly_connected(const GdSystem& g);

// Perron root of a non-negative irreducible matrix.
double perron_root(const Eigen::MatrixXd& m, double tol = 1e-12);
Eigen::MatrixXd gd_ratio_matrix(const GdSystem& g, double s);
double gd_dimension(const GdSystem& g);

// Pair search over the cycle words at `vertex` (edge paths from the vertex back to it).
WspVerdict gd_wsp_search(const GdSystem& g, int vertex, const WspOptions& opts);

struct GdCrossCheck {
    std::vector<int> vertices;
    std::vector<WspVerdict> verdicts;
    bool agree = true;
};

// Runs the search at vertex 0 and, when there are several, at the last vertex too, with the
// length and thresholds carried over along the connecting paths.
GdCrossCheck gd_wsp_cross_check(const GdSystem& g, const WspOptions& opts);

// Shortest edge path from i to j (ties to the smallest edge indices); empty when i == j.
Word connecting_path(const GdSystem& g, int from, int to);
// O_h⁻¹·ω for the connecting path h.
Vec transport_direction(const GdSystem& g, const Word& path, const Vec& omega);

// Word-tree samples of every F_i at leaf ratio ≤ delta.
std::vector<PointCloud> gd_sample(const GdSystem& g, double delta, std::size_t point_budget = kDefaultPointBudget);

}  // namespace olab
