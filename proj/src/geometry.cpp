#include "olab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace olab {

OrthogonalMatrix::OrthogonalMatrix(const Mat& m) {
    if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxDim)
        fail(ErrorCode::Domain, "orthogonal part must be square with 1 <= d <= 4");
    if (!m.allFinite()) fail(ErrorCode::Numeric, "orthogonal part has non-finite entries");
    // Loose acceptance gate for hand-typed matrices; the polar snap does the rest.
    if (orthogonality_residual(m) > 1e-6)
        fail(ErrorCode::Domain, "matrix is not orthogonal (residual above 1e-6)");
    m_ = polar_orthogonal(m);
    proper_ = m_.determinant() > 0.0;
}

OrthogonalMatrix OrthogonalMatrix::identity(int d) {
    return OrthogonalMatrix(Mat::Identity(d, d));
}

OrthogonalMatrix OrthogonalMatrix::rotation2d(double angle) {
    Mat r(2, 2);
    const double c = std::cos(angle), s = std::sin(angle);
    r << c, -s, s, c;
    return OrthogonalMatrix(r);
}

OrthogonalMatrix OrthogonalMatrix::axis_angle(const Vec& axis, double angle) {
    if (axis.size() != 3) fail(ErrorCode::Domain, "axis-angle rotations need d = 3");
    const double n = axis.norm();
    if (!(n > 0.0)) fail(ErrorCode::Domain, "rotation axis must be non-zero");
    Eigen::Vector3d k = (axis / n).head<3>();
    Eigen::Matrix3d r = Eigen::AngleAxisd(angle, k).toRotationMatrix();
    return OrthogonalMatrix(Mat(r));
}

bool OrthogonalMatrix::is_identity(double tol) const {
    return (m_ - Mat::Identity(m_.rows(), m_.cols())).cwiseAbs().maxCoeff() <= tol;
}

Similarity::Similarity(double c, const OrthogonalMatrix& o, const Vec& b)
    : ratio(c), orth(o.matrix()), trans(b) {
    if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorCode::Domain, "similarity ratio must be positive");
    if (b.size() != o.dim()) fail(ErrorCode::Domain, "translation and orthogonal part disagree on d");
}

Similarity Similarity::identity(int d) {
    return Similarity(1.0, Mat(Mat::Identity(d, d)), Vec(Vec::Zero(d)));
}

Vec Similarity::fixed_point() const {
    const int d = dim();
    Mat a = Mat::Identity(d, d) - ratio * orth;
    return a.partialPivLu().solve(trans);
}

Similarity compose(const Similarity& a, const Similarity& b) {
    return Similarity(a.ratio * b.ratio, Mat(a.orth * b.orth), Vec(a.ratio * (a.orth * b.trans) + a.trans));
}

Similarity invert(const Similarity& s) {
    const double inv = 1.0 / s.ratio;
    Mat ot = s.orth.transpose();
    return Similarity(inv, ot, Vec(-inv * (ot * s.trans)));
}

Word Word::from_one_based(const std::vector<int>& l) {
    Word w;
    w.letters.reserve(l.size());
    for (int x : l) {
        if (x < 1) fail(ErrorCode::InvalidWord, "letters are 1-based");
        w.letters.push_back(static_cast<Letter>(x - 1));
    }
    return w;
}

Word Word::concat(const Word& other) const {
    Word w = *this;
    w.letters.insert(w.letters.end(), other.letters.begin(), other.letters.end());
    return w;
}

std::string Word::str() const {
    std::string out;
    for (std::size_t i = 0; i < letters.size(); ++i) {
        if (i) out += '.';
        out += std::to_string(letters[i] + 1);
    }
    return out;
}

IfsSystem::IfsSystem(std::vector<Similarity> maps, std::vector<std::string> labels)
    : maps_(std::move(maps)), labels_(std::move(labels)) {
    if (maps_.empty()) fail(ErrorCode::Domain, "an IFS needs at least one map");
    if (maps_.size() > 65535) fail(ErrorCode::Domain, "alphabet too large");
    dim_ = maps_.front().dim();
    if (dim_ < 1 || dim_ > kMaxDim) fail(ErrorCode::Domain, "dimension must be between 1 and 4");
    c_min_ = std::numeric_limits<double>::infinity();
    c_max_ = 0.0;
    for (const auto& s : maps_) {
        if (s.dim() != dim_ || s.orth.rows() != dim_)
            fail(ErrorCode::Domain, "maps of one IFS must share the dimension");
        if (!(s.ratio > 0.0 && s.ratio < 1.0)) fail(ErrorCode::Domain, "IFS ratios must lie in (0,1)");
        if (!s.trans.allFinite() || !s.orth.allFinite()) fail(ErrorCode::Numeric, "non-finite map");
        c_min_ = std::min(c_min_, s.ratio);
        c_max_ = std::max(c_max_, s.ratio);
    }
    if (!labels_.empty() && labels_.size() != maps_.size())
        fail(ErrorCode::Domain, "label count differs from map count");
}

std::optional<double> IfsSystem::common_ratio() const {
    if (c_min_ == c_max_) return c_min_;
    return std::nullopt;
}

bool IfsSystem::homogeneous_identity() const {
    if (!common_ratio()) return false;
    for (const auto& s : maps_)
        if (!(s.orth - Mat::Identity(dim_, dim_)).isZero(0.0)) return false;
    return true;
}

void IfsSystem::check_word(const Word& w) const {
    for (Letter l : w.letters)
        if (l >= maps_.size())
            fail(ErrorCode::InvalidWord, "letter " + std::to_string(l + 1) + " outside alphabet of size " +
                                             std::to_string(maps_.size()));
}

bool Box::contains(const Vec& x, double slack) const {
    for (int i = 0; i < dim(); ++i)
        if (x(i) < lo(i) - slack || x(i) > hi(i) + slack) return false;
    return true;
}

std::vector<Vec> Box::vertices() const {
    const int d = dim();
    std::vector<Vec> out;
    out.reserve(std::size_t{1} << d);
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v(i) = (mask >> i) & 1u ? hi(i) : lo(i);
        out.push_back(v);
    }
    return out;
}

Similarity compose(const IfsSystem& ifs, const Word& w) {
    ifs.check_word(w);
    Similarity s = Similarity::identity(ifs.dim());
    for (Letter l : w.letters) s = compose(s, ifs.map(l));
    return s;
}

Box fixed_point_cube(const IfsSystem& ifs) {
    double bmax = 0.0;
    for (const auto& s : ifs.maps()) bmax = std::max(bmax, s.trans.norm());
    const double r = bmax / (1.0 - ifs.c_max());
    const int d = ifs.dim();
    return Box{Vec::Constant(d, -r), Vec::Constant(d, r)};
}

namespace {

Box image_hull(const IfsSystem& ifs, const Box& b) {
    const int d = ifs.dim();
    Box out{Vec::Constant(d, std::numeric_limits<double>::infinity()),
            Vec::Constant(d, -std::numeric_limits<double>::infinity())};
    const auto verts = b.vertices();
    for (const auto& s : ifs.maps())
        for (const auto& v : verts) {
            Vec y = s.apply(v);
            out.lo = out.lo.cwiseMin(y);
            out.hi = out.hi.cwiseMax(y);
        }
    return out;
}

}  // namespace

Box attractor_box(const IfsSystem& ifs) {
    Box b = fixed_point_cube(ifs);
    for (int it = 0; it < 2000; ++it) {
        Box n = image_hull(ifs, b);
        n.lo = n.lo.cwiseMax(b.lo);
        n.hi = n.hi.cwiseMin(b.hi);
        const double change = std::max((n.lo - b.lo).cwiseAbs().maxCoeff(), (n.hi - b.hi).cwiseAbs().maxCoeff());
        b = n;
        if (change <= 1e-16 * std::max(1.0, b.diameter())) break;
    }
    return b;
}

double sup_norm_on_box(const AffineMap& phi, const Box& box) {
    double best = 0.0;
    for (const auto& v : box.vertices()) best = std::max(best, phi.apply(v).norm());
    return best;
}

DefectResult defect_of_maps(const Similarity& sa, const Similarity& sb, const Box& cube) {
    const int d = sa.dim();
    DefectResult r;
    Mat ot = sa.orth.transpose();
    r.phi.linear = (sb.ratio / sa.ratio) * (ot * sb.orth) - Mat::Identity(d, d);
    r.phi.offset = (1.0 / sa.ratio) * (ot * (sb.trans - sa.trans));
    r.sup_norm = sup_norm_on_box(r.phi, cube);
    r.op_norm = operator_norm(r.phi.linear);
    return r;
}

DefectResult defect(const IfsSystem& ifs, const Word& alpha, const Word& beta, const Box& cube) {
    ifs.check_word(alpha);
    ifs.check_word(beta);
    if (alpha == beta) fail(ErrorCode::DegeneratePair, "alpha and beta are the same word " + alpha.str());
    std::size_t p = 0;
    while (p < alpha.size() && p < beta.size() && alpha[p] == beta[p]) ++p;
    Word a(std::vector<Letter>(alpha.letters.begin() + p, alpha.letters.end()));
    Word b(std::vector<Letter>(beta.letters.begin() + p, beta.letters.end()));
    return defect_of_maps(compose(ifs, a), compose(ifs, b), cube);
}

BallMinimum min_norm_on_ball(const AffineMap& phi, const Vec& center, double radius) {
    if (!phi.linear.allFinite() || !phi.offset.allFinite() || !center.allFinite() || !std::isfinite(radius))
        fail(ErrorCode::Numeric, "min_norm_on_ball received non-finite input");
    if (!(radius > 0.0)) fail(ErrorCode::Domain, "ball radius must be positive");
    const int d = static_cast<int>(center.size());
    const Mat& m = phi.linear;
    const Vec w = m * center + phi.offset;
    const Mat h = m.transpose() * m;
    const Vec g = m.transpose() * w;

    Eigen::SelfAdjointEigenSolver<Mat> eig(h);
    const Vec lam = eig.eigenvalues();
    const Mat q = eig.eigenvectors();
    Vec gh = q.transpose() * g;
    const double lam_tol = 1e-13 * std::max(lam.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    for (int i = 0; i < d; ++i)
        if (lam(i) <= lam_tol) gh(i) = 0.0;  // g lies in range(H); anything else is rounding

    auto step = [&](double mu) {
        Vec c(d);
        for (int i = 0; i < d; ++i) {
            const double den = lam(i) + mu;
            c(i) = den > lam_tol ? -gh(i) / den : 0.0;
        }
        return Vec(q * c);
    };

    Vec y = step(0.0);
    if (y.norm() > radius) {
        // Secular equation 1/‖y(μ)‖ = 1/ρ, increasing in μ; safeguarded Newton inside a bracket.
        auto eval = [&](double mu, double& f, double& fp) {
            double s2 = 0.0, s3 = 0.0;
            for (int i = 0; i < d; ++i) {
                const double den = lam(i) + mu;
                if (gh(i) == 0.0) continue;
                s2 += gh(i) * gh(i) / (den * den);
                s3 += gh(i) * gh(i) / (den * den * den);
            }
            const double nrm = std::sqrt(s2);
            f = 1.0 / nrm - 1.0 / radius;
            fp = s3 / (nrm * nrm * nrm);
        };
        double lo = 0.0, hi = gh.norm() / radius;
        double mu = 0.5 * hi;
        for (int it = 0; it < 300; ++it) {
            double f, fp;
            eval(mu, f, fp);
            if (f > 0.0) hi = mu; else lo = mu;
            if (f == 0.0 || hi - lo <= 1e-16 * hi) break;
            double next = fp > 0.0 ? mu - f / fp : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            mu = next;
        }
        y = step(mu);
        const double n = y.norm();
        if (n > 0.0) y *= radius / n;
    }
    BallMinimum out;
    out.argmin = center + y;
    out.value = phi.apply(out.argmin).norm();
    return out;
}

}  // namespace olab
