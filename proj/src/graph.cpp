#include "olab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace olab {

GdSystem::GdSystem(int vertices, std::vector<GdEdge> edges, std::vector<std::string> labels)
    : q_(vertices), edges_(std::move(edges)), labels_(std::move(labels)) {
    if (q_ < 1) fail(ErrorCode::Domain, "a graph-directed system needs at least one vertex");
    if (edges_.empty()) fail(ErrorCode::Domain, "a graph-directed system needs edges");
    dim_ = edges_.front().map.dim();
    std::vector<char> has_out(q_, 0);
    for (const auto& e : edges_) {
        if (e.from < 0 || e.from >= q_ || e.to < 0 || e.to >= q_)
            fail(ErrorCode::Domain, "edge endpoint outside 1.." + std::to_string(q_));
        if (e.map.dim() != dim_) fail(ErrorCode::Domain, "edge maps must share the dimension");
        if (!(e.map.ratio > 0.0 && e.map.ratio < 1.0)) fail(ErrorCode::Domain, "edge ratios must lie in (0,1)");
        has_out[e.from] = 1;
    }
    for (int i = 0; i < q_; ++i)
        if (!has_out[i]) fail(ErrorCode::Domain, "vertex " + std::to_string(i + 1) + " has no outgoing edge");
    if (!labels_.empty() && labels_.size() != edges_.size())
        fail(ErrorCode::Domain, "label count differs from edge count");
}

IfsSystem GdSystem::edge_alphabet() const {
    std::vector<Similarity> maps;
    for (const auto& e : edges_) maps.push_back(e.map);
    return IfsSystem(std::move(maps), labels_);
}

SccResult strongly_connected(int n, const std::vector<std::pair<int, int>>& arcs) {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : arcs) adj[a].push_back(b);
    // Iterative Tarjan.
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
    std::vector<char> on(n, 0);
    int counter = 0, ncomp = 0;
    std::vector<std::pair<int, std::size_t>> call;
    for (int root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        call.push_back({root, 0});
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on[root] = 1;
        while (!call.empty()) {
            auto& [v, it] = call.back();
            if (it < adj[v].size()) {
                const int w = adj[v][it++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on[w] = 1;
                    call.push_back({w, 0});
                } else if (on[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on[w] = 0;
                    comp[w] = ncomp;
                    if (w == v) break;
                }
                ++ncomp;
            }
            const int done = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
        }
    }
    SccResult r;
    r.components.resize(ncomp);
    for (int v = 0; v < n; ++v) r.components[comp[v]].push_back(v);
    std::sort(r.components.begin(), r.components.end());
    r.component_of.assign(n, 0);
    for (std::size_t c = 0; c < r.components.size(); ++c)
        for (int v : r.components[c]) r.component_of[v] = static_cast<int>(c);
    r.strongly_connected = ncomp == 1;
    return r;
}

SccResult strongly_connected(const GdSystem& g) {
    std::vector<std::pair<int, int>> arcs;
    for (const auto& e : g.edges()) arcs.emplace_back(e.from, e.to);
    return strongly_connected(g.vertices(), arcs);
}

double perron_root(const Eigen::MatrixXd& m, double tol) {
    const Eigen::Index n = m.rows();
    if (n == 0 || m.cols() != n) fail(ErrorCode::Domain, "perron_root needs a square matrix");
    if ((m.array() < 0.0).any()) fail(ErrorCode::Domain, "perron_root needs a non-negative matrix");
    // M + I is primitive for irreducible M; Collatz–Wielandt bounds bracket its Perron root.
    const Eigen::MatrixXd b = m + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100000; ++it) {
        const Eigen::VectorXd y = b * x;
        lo = (y.array() / x.array()).minCoeff();
        hi = (y.array() / x.array()).maxCoeff();
        x = y / y.maxCoeff();
        if (hi - lo <= tol * hi) break;
    }
    return 0.5 * (lo + hi) - 1.0;
}

Eigen::MatrixXd gd_ratio_matrix(const GdSystem& g, double s) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.vertices(), g.vertices());
    for (const auto& e : g.edges()) m(e.from, e.to) += std::pow(e.map.ratio, s);
    return m;
}

double gd_dimension(const GdSystem& g) {
    if (!strongly_connected(g).strongly_connected)
        fail(ErrorCode::Precondition, "gd_dimension needs a strongly connected graph");
    auto rho = [&](double s) { return perron_root(gd_ratio_matrix(g, s), 1e-14); };
    double lo = 0.0, hi = 1.0;
    // ρ(M(0)) ≥ 1 for a strongly connected graph; equality means a single cycle and s = 0.
    if (rho(lo) <= 1.0 + 1e-12) return 0.0;
    while (rho(hi) > 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) fail(ErrorCode::Numeric, "Mauldin-Williams root not bracketed");
    }
    while (hi - lo > 1e-14 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (rho(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Cycle levels at `vertex`: level L holds the edge paths of length L from vertex back to it.
std::vector<WordLevel> cycle_levels(const GdSystem& g, int vertex, const Vec& probe, int max_len,
                                    std::size_t budget, bool& truncated, std::vector<std::string>& notes) {
    const auto& edges = g.edges();
    // ending[v]: paths of the current length from v to `vertex`.
    std::vector<WordLevel> ending(g.vertices());
    for (int v = 0; v < g.vertices(); ++v) ending[v].length = 1;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].to != vertex) continue;
        auto& lv = ending[edges[e].from];
        lv.letters.push_back(static_cast<Letter>(e));
        lv.images.push_back(edges[e].map.apply(probe));
        lv.ratios.push_back(edges[e].map.ratio);
    }
    std::vector<WordLevel> out{ending[vertex]};
    std::size_t total = 0;
    for (const auto& lv : ending) total += lv.size();
    for (int L = 2; L <= max_len; ++L) {
        std::size_t next_total = 0;
        for (const auto& e : edges) next_total += ending[e.to].size();
        if (total + next_total > budget) {
            truncated = true;
            notes.push_back("cycle enumeration stopped before length " + std::to_string(L) +
                            ": path count exceeds the budget");
            break;
        }
        std::vector<WordLevel> next(g.vertices());
        for (auto& lv : next) lv.length = L;
        for (std::size_t ei = 0; ei < edges.size(); ++ei) {
            const auto& e = edges[ei];
            const WordLevel& prev = ending[e.to];
            WordLevel& lv = next[e.from];
            for (std::size_t w = 0; w < prev.size(); ++w) {
                lv.letters.push_back(static_cast<Letter>(ei));
                auto b = prev.letters.begin() + static_cast<std::ptrdiff_t>(w * static_cast<std::size_t>(prev.length));
                lv.letters.insert(lv.letters.end(), b, b + prev.length);
                lv.images.push_back(e.map.apply(prev.images[w]));
                lv.ratios.push_back(e.map.ratio * prev.ratios[w]);
            }
        }
        total += next_total;
        ending = std::move(next);
        out.push_back(ending[vertex]);
    }
    return out;
}

}  // namespace

WspVerdict gd_wsp_search(const GdSystem& g, int vertex, const WspOptions& opts) {
    if (vertex < 0 || vertex >= g.vertices()) fail(ErrorCode::Domain, "vertex outside the graph");
    if (!strongly_connected(g).strongly_connected)
        fail(ErrorCode::Precondition, "gd_wsp_search needs a strongly connected graph");
    const IfsSystem alpha = g.edge_alphabet();
    PairSearchSpec spec;
    spec.alphabet = alpha.maps();
    spec.cube = opts.cube ? *opts.cube : fixed_point_cube(alpha);
    const bool homo = alpha.homogeneous_identity();
    spec.probe = homo ? Vec::Zero(g.dim()) : spec.cube.center();
    spec.equal_length_only = homo;
    spec.translation_closed_form = homo;
    bool truncated = false;
    std::vector<std::string> notes;
    spec.levels = cycle_levels(g, vertex, spec.probe, opts.max_len, opts.budget, truncated, notes);
    WspVerdict v = run_pair_search(std::move(spec), opts);
    v.method = "gd_wsp_search@" + std::to_string(vertex + 1);
    if (truncated) {
        v.budget_exhausted = true;
        grade_verdict(v, opts);
    }
    v.notes.insert(v.notes.end(), notes.begin(), notes.end());
    return v;
}

GdCrossCheck gd_wsp_cross_check(const GdSystem& g, const WspOptions& opts) {
    GdCrossCheck c;
    c.vertices.push_back(0);
    if (g.vertices() > 1) c.vertices.push_back(g.vertices() - 1);
    for (int v : c.vertices) {
        if (v == 0) {
            c.verdicts.push_back(gd_wsp_search(g, 0, opts));
            continue;
        }
        // A cycle pair (e, f) at 0 reappears at v as (h e h', h f h') with h: v → 0, h': 0 → v.
        // Its defect is the conjugate by S_h', scaled by 1/c_h', so thresholds and length follow.
        const Word h = connecting_path(g, v, 0);
        const Word back = connecting_path(g, 0, v);
        double c_back = 1.0;
        for (Letter e : back.letters) c_back *= g.edges()[e].map.ratio;
        WspOptions o = opts;
        o.max_len = opts.max_len + static_cast<int>(h.size() + back.size());
        o.witness_threshold = opts.witness_threshold / c_back;
        o.holds_threshold = opts.holds_threshold / c_back;
        WspVerdict r = gd_wsp_search(g, v, o);
        std::ostringstream note;
        note << "transported from vertex 1: max_len " << o.max_len << ", thresholds scaled by " << 1.0 / c_back;
        r.notes.push_back(note.str());
        c.verdicts.push_back(std::move(r));
    }
    for (const auto& v : c.verdicts) c.agree = c.agree && v.status == c.verdicts.front().status;
    return c;
}

Word connecting_path(const GdSystem& g, int from, int to) {
    const int n = g.vertices();
    if (from < 0 || from >= n || to < 0 || to >= n) fail(ErrorCode::Domain, "vertex outside the graph");
    std::vector<int> via(n, -1);
    std::vector<char> seen(n, 0);
    std::deque<int> queue{from};
    seen[from] = 1;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (v == to) break;
        for (std::size_t e = 0; e < g.edges().size(); ++e) {
            const auto& ed = g.edges()[e];
            if (ed.from != v || seen[ed.to]) continue;
            seen[ed.to] = 1;
            via[ed.to] = static_cast<int>(e);
            queue.push_back(ed.to);
        }
    }
    if (!seen[to]) fail(ErrorCode::Precondition, "no edge path between the vertices");
    std::vector<Letter> rev;
    for (int v = to; v != from;) {
        const int e = via[v];
        rev.push_back(static_cast<Letter>(e));
        v = g.edges()[e].from;
    }
    return Word(std::vector<Letter>(rev.rbegin(), rev.rend()));
}

Vec transport_direction(const GdSystem& g, const Word& path, const Vec& omega) {
    Mat o = Mat::Identity(g.dim(), g.dim());
    for (Letter e : path.letters) o = o * g.edges().at(e).map.orth;
    return o.transpose() * omega;
}

std::vector<PointCloud> gd_sample(const GdSystem& g, double delta, std::size_t point_budget) {
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::Domain, "word-tree delta must lie in (0,1)");
    if (!strongly_connected(g).strongly_connected)
        fail(ErrorCode::Precondition, "gd_sample needs a strongly connected graph");
    const int q = g.vertices();
    const IfsSystem alpha = g.edge_alphabet();
    // Base point of F_v: the fixed point of a shortest cycle through v.
    std::vector<Vec> base(q);
    for (int v = 0; v < q; ++v) {
        Word cyc;
        for (std::size_t e = 0; e < g.edges().size() && cyc.empty(); ++e)
            if (g.edges()[e].from == v) {
                Word back = connecting_path(g, g.edges()[e].to, v);
                cyc = Word({static_cast<Letter>(e)}).concat(back);
            }
        base[v] = compose(alpha, cyc).fixed_point();
    }
    const double diam = attractor_box(alpha).diameter();
    std::vector<PointCloud> out(q);
    std::size_t emitted = 0;
    for (int v = 0; v < q; ++v) {
        PointCloud& c = out[v];
        c.dim = g.dim();
        c.resolution = delta * diam;
        c.provenance.method = "gd-word-tree";
        struct Node {
            Similarity map;
            int vertex;
            int depth;
        };
        std::vector<Node> stack{{Similarity::identity(g.dim()), v, 0}};
        bool first = true;
        while (!stack.empty()) {
            Node n = std::move(stack.back());
            stack.pop_back();
            if (n.map.ratio <= delta * (1.0 + 1e-12)) {
                if (++emitted > point_budget)
                    fail(ErrorCode::PointBudget, "graph-directed sample exceeds the point budget");
                c.points.push_back(n.map.apply(base[n.vertex]));
                if (first) c.provenance.min_depth = c.provenance.max_depth = n.depth;
                c.provenance.min_depth = std::min(c.provenance.min_depth, n.depth);
                c.provenance.max_depth = std::max(c.provenance.max_depth, n.depth);
                first = false;
                continue;
            }
            for (std::size_t e = g.edges().size(); e-- > 0;) {
                const auto& ed = g.edges()[e];
                if (ed.from == n.vertex) stack.push_back({compose(n.map, ed.map), ed.to, n.depth + 1});
            }
        }
    }
    return out;
}

}  // namespace olab
