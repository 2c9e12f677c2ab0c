#include "olab/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <ostream>

namespace olab {

Subspace Subspace::zero(int d) {
    Subspace s;
    s.ambient = d;
    s.basis = Mat(d, 0);
    return s;
}

Subspace Subspace::whole(int d) {
    Subspace s;
    s.ambient = d;
    s.basis = Mat::Identity(d, d);
    return s;
}

namespace {

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0.0) v = -v;
            return;
        }
}

// Appends w's component orthogonal to the current basis when it exceeds tol.
bool try_extend(Mat& basis, const Vec& w, double tol) {
    Vec r = w;
    for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index j = 0; j < basis.cols(); ++j) r -= basis.col(j).dot(r) * basis.col(j);
    const double n = r.norm();
    if (n <= tol) return false;
    Mat nb(basis.rows(), basis.cols() + 1);
    nb.leftCols(basis.cols()) = basis;
    nb.col(basis.cols()) = r / n;
    basis = nb;
    return true;
}

}  // namespace

Subspace span_directions(const std::vector<Vec>& directions, int d, double tol) {
    Subspace s = Subspace::zero(d);
    if (directions.empty()) return s;
    for (const auto& u : directions) {
        if (u.size() != d) fail(ErrorCode::Domain, "direction dimension mismatch");
        if (std::abs(u.norm() - 1.0) > 1e-6) fail(ErrorCode::Precondition, "directions must be unit vectors");
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(directions.size()), d);
    for (std::size_t i = 0; i < directions.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = directions[i].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol) ++rank;
        if (sv(i) >= tol / 10.0 && sv(i) <= tol * 10.0) s.rank_uncertain = true;
    }
    Eigen::MatrixXd b = svd.matrixV().leftCols(rank);
    for (int j = 0; j < rank; ++j) normalize_sign(b.col(j));
    s.basis = b;
    return s;
}

std::vector<Mat> orthogonal_generators(const IfsSystem& ifs) {
    std::vector<Mat> gens;
    for (const auto& m : ifs.maps()) {
        bool seen = false;
        for (const auto& g : gens)
            if ((g - m.orth).cwiseAbs().maxCoeff() <= 1e-12) seen = true;
        if (!seen) gens.push_back(m.orth);
    }
    return gens;
}

ClosureResult group_closure(const std::vector<Mat>& generators, const Subspace& v, int budget, double tol) {
    ClosureResult r;
    r.subspace = v;
    const int d = v.ambient;
    Mat basis = v.basis;
    if (basis.cols() == 0 || basis.cols() == d) {
        r.stable = true;
        return r;
    }
    for (int it = 1; it <= budget; ++it) {
        r.iterations = it;
        bool grew = false;
        for (std::size_t g = 0; g < generators.size(); ++g)
            for (int inv = 0; inv < 2; ++inv) {
                const Mat o = inv ? Mat(generators[g].transpose()) : generators[g];
                const Mat snapshot = basis;
                for (Eigen::Index j = 0; j < snapshot.cols(); ++j)
                    if (try_extend(basis, o * snapshot.col(j), tol)) {
                        grew = true;
                        r.trace.push_back({it, g, inv == 1, static_cast<int>(basis.cols())});
                    }
            }
        if (!grew || basis.cols() == d) {
            r.stable = true;
            break;
        }
    }
    r.subspace.basis = basis;
    return r;
}

ClosureResult group_closure(const IfsSystem& ifs, const Subspace& v, int budget, double tol) {
    return group_closure(orthogonal_generators(ifs), v, budget, tol);
}

double invariance_residual(const std::vector<Mat>& generators, const Subspace& v) {
    const Projectors pr = projectors(v);
    double worst = 0.0;
    for (const auto& g : generators)
        for (int inv = 0; inv < 2; ++inv) {
            const Mat o = inv ? Mat(g.transpose()) : g;
            for (Eigen::Index j = 0; j < v.basis.cols(); ++j)
                worst = std::max(worst, (pr.p_perp * (o * v.basis.col(j))).norm());
        }
    return worst;
}

Projectors projectors(const Subspace& v) {
    Projectors p;
    const int d = v.ambient;
    p.p = v.basis.cols() ? Mat(v.basis * v.basis.transpose()) : Mat(Mat::Zero(d, d));
    p.p_perp = Mat::Identity(d, d) - p.p;
    return p;
}

Mat orthogonal_complement(const Subspace& v) {
    const int d = v.ambient;
    Mat basis = v.basis;
    for (int i = 0; i < d && basis.cols() < d; ++i) try_extend(basis, Vec(Vec::Unit(d, i)), 1e-8);
    Mat comp = basis.rightCols(d - v.dim());
    return comp;
}

RotationClass classify_rotation(double angle, long max_denominator, double tol) {
    RotationClass rc;
    double x = std::fmod(angle / M_PI, 2.0);
    if (x < 0.0) x += 2.0;
    // Continued-fraction convergents of x.
    long p0 = 1, q0 = 0, p1 = static_cast<long>(std::floor(x)), q1 = 1;
    double rem = x - std::floor(x);
    for (int it = 0; it < 64; ++it) {
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= tol * std::max(1.0, x)) {
            rc.finite = true;
            rc.p = p1;
            rc.q = q1;
            const long g = std::gcd(p1, q1);
            rc.p /= g;
            rc.q /= g;
            rc.order = rc.p % 2 == 0 ? rc.q : 2 * rc.q;
            return rc;
        }
        if (rem <= 0.0) break;
        const double inv = 1.0 / rem;
        const long a = static_cast<long>(std::floor(inv));
        rem = inv - std::floor(inv);
        const long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_denominator) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return rc;
}

GroupEnumeration enumerate_group(const IfsSystem& ifs, std::size_t cap, double tol) {
    GroupEnumeration g;
    std::deque<std::size_t> queue;
    auto find = [&](const Mat& m) {
        for (std::size_t i = 0; i < g.elements.size(); ++i)
            if ((g.elements[i] - m).cwiseAbs().maxCoeff() <= tol) return true;
        return false;
    };
    for (std::size_t i = 0; i < ifs.size(); ++i) {
        const Mat& m = ifs.map(i).orth;
        if (!find(m)) {
            g.elements.push_back(m);
            g.words.push_back(Word({static_cast<Letter>(i)}));
            queue.push_back(g.elements.size() - 1);
        }
    }
    while (!queue.empty()) {
        const std::size_t e = queue.front();
        queue.pop_front();
        for (std::size_t i = 0; i < ifs.size(); ++i) {
            Mat m = g.elements[e] * ifs.map(i).orth;
            if (find(m)) continue;
            if (g.elements.size() >= cap) return g;
            g.elements.push_back(polar_orthogonal(m));
            g.words.push_back(g.words[e].concat(Word({static_cast<Letter>(i)})));
            queue.push_back(g.elements.size() - 1);
        }
    }
    g.finite = true;
    return g;
}

void write_subspace_report(std::ostream& os, const ClosureResult& r) {
    os << "dim: " << r.subspace.dim() << '\n';
    os << "ambient: " << r.subspace.ambient << '\n';
    os << "rank_uncertain: " << (r.subspace.rank_uncertain ? "true" : "false") << '\n';
    os << "closure_iterations: " << r.iterations << '\n';
    os << "closure_stable: " << (r.stable ? "true" : "false") << '\n';
    for (Eigen::Index j = 0; j < r.subspace.basis.cols(); ++j)
        os << "basis: " << format_vec(Vec(r.subspace.basis.col(j))) << '\n';
    for (const auto& s : r.trace)
        os << "trace: iteration " << s.iteration << " generator " << s.generator + 1 << (s.inverse ? " (inverse)" : "")
           << " -> dim " << s.new_dim << '\n';
}

}  // namespace olab
