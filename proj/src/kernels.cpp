#include "olab/kernels.hpp"

#include "olab/grid.hpp"
#include "olab/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace olab::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

namespace {

constexpr double kLeafSlack = 1.0 + 1e-12;

struct Node {
    Similarity map;
    int depth;
};

// Depth-first expansion of one subtree, children visited in letter order.
void expand(const IfsSystem& ifs, const Node& root, double thr, const Vec& base, std::size_t budget,
            std::atomic<std::size_t>& emitted, TreeLeaves& out) {
    std::vector<Node> stack{root};
    while (!stack.empty()) {
        Node n = std::move(stack.back());
        stack.pop_back();
        if (n.map.ratio <= thr) {
            if (emitted.fetch_add(1, std::memory_order_relaxed) >= budget) {
                out.over_budget = true;
                return;
            }
            out.points.push_back(n.map.apply(base));
            if (out.points.size() == 1) out.min_depth = out.max_depth = n.depth;
            out.min_depth = std::min(out.min_depth, n.depth);
            out.max_depth = std::max(out.max_depth, n.depth);
            continue;
        }
        for (std::size_t i = ifs.size(); i-- > 0;) stack.push_back({compose(n.map, ifs.map(i)), n.depth + 1});
    }
}

void merge_into(TreeLeaves& acc, TreeLeaves&& part) {
    if (part.points.empty()) {
        acc.over_budget = acc.over_budget || part.over_budget;
        return;
    }
    if (acc.points.empty()) {
        acc.min_depth = part.min_depth;
        acc.max_depth = part.max_depth;
    } else {
        acc.min_depth = std::min(acc.min_depth, part.min_depth);
        acc.max_depth = std::max(acc.max_depth, part.max_depth);
    }
    acc.over_budget = acc.over_budget || part.over_budget;
    acc.points.insert(acc.points.end(), part.points.begin(), part.points.end());
}

}  // namespace

namespace serial {

double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    PointGrid grid(b, PointGrid::suggest_cell(b, 1.0));
    double worst = 0.0;
    for (const auto& p : a) worst = std::max(worst, grid.nearest(p).second);
    return worst;
}

TreeLeaves word_tree(const IfsSystem& ifs, double delta, const Vec& base, std::size_t budget) {
    TreeLeaves out;
    std::atomic<std::size_t> emitted{0};
    expand(ifs, Node{Similarity::identity(ifs.dim()), 0}, delta * kLeafSlack, base, budget, emitted, out);
    return out;
}

std::vector<CountRow> covering_counts(const CoveringCounter& cc, const std::vector<Vec>& centers, double R,
                                      const std::vector<double>& rs) {
    std::vector<CountRow> rows(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto sub = cc.ball(centers[i], R);
        rows[i].center = i;
        for (double r : rs) rows[i].counts.push_back(cc.net_size(sub, r));
    }
    return rows;
}

}  // namespace serial

namespace parallel {

double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    PointGrid grid(b, PointGrid::suggest_cell(b, 1.0));
    double worst = 0.0;
    const long n = static_cast<long>(a.size());
#pragma omp parallel for reduction(max : worst) schedule(static)
    for (long i = 0; i < n; ++i) worst = std::max(worst, grid.nearest(a[i]).second);
    return worst;
}

TreeLeaves word_tree(const IfsSystem& ifs, double delta, const Vec& base, std::size_t budget) {
    const double thr = delta * kLeafSlack;
    // Breadth-first split into independent subtrees, kept in lexicographic order.
    std::vector<Node> frontier{Node{Similarity::identity(ifs.dim()), 0}};
    const std::size_t want = 64 * static_cast<std::size_t>(max_threads());
    while (frontier.size() < want) {
        std::vector<Node> next;
        bool grew = false;
        for (auto& n : frontier) {
            if (n.map.ratio <= thr) {
                next.push_back(std::move(n));
                continue;
            }
            grew = true;
            for (std::size_t i = 0; i < ifs.size(); ++i) next.push_back({compose(n.map, ifs.map(i)), n.depth + 1});
        }
        frontier = std::move(next);
        if (!grew) break;
    }
    std::vector<TreeLeaves> parts(frontier.size());
    std::atomic<std::size_t> emitted{0};
    const long n = static_cast<long>(frontier.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) expand(ifs, frontier[i], thr, base, budget, emitted, parts[i]);
    TreeLeaves out;
    for (auto& p : parts) merge_into(out, std::move(p));
    return out;
}

std::vector<CountRow> covering_counts(const CoveringCounter& cc, const std::vector<Vec>& centers, double R,
                                      const std::vector<double>& rs) {
    std::vector<CountRow> rows(centers.size());
    const long n = static_cast<long>(centers.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
        const auto sub = cc.ball(centers[i], R);
        rows[i].center = static_cast<std::size_t>(i);
        for (double r : rs) rows[i].counts.push_back(cc.net_size(sub, r));
    }
    return rows;
}

}  // namespace parallel

}  // namespace olab::kernels
