#include "olab/dimension.hpp"

#include "olab/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <set>

namespace olab {

double similarity_dimension(const std::vector<double>& ratios) {
    if (ratios.empty()) fail(ErrorCode::Domain, "similarity dimension of an empty ratio list");
    double cmax = 0.0;
    for (double c : ratios) {
        if (!(c > 0.0 && c < 1.0)) fail(ErrorCode::Domain, "ratios must lie in (0,1)");
        cmax = std::max(cmax, c);
    }
    auto f = [&](double s) {
        double t = -1.0;
        for (double c : ratios) t += std::pow(c, s);
        return t;
    };
    double lo = 0.0;
    double hi = std::log(static_cast<double>(ratios.size())) / -std::log(cmax);
    if (f(hi) > 0.0) hi *= 1.0 + 1e-12;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    double s = 0.5 * (lo + hi);
    double fp = 0.0;
    for (double c : ratios) fp += std::pow(c, s) * std::log(c);
    if (fp != 0.0) {
        const double polished = s - f(s) / fp;
        if (polished >= lo - 1e-12 && polished <= hi + 1e-12) s = polished;
    }
    return s;
}

namespace {

struct Fit {
    double slope = 0.0;
    double rms = 0.0;
};

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Fit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (my + f.slope * (x[i] - mx));
        ss += e * e;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

void finish(DimensionEstimate& e, double value, double rms, int d) {
    e.residual_rms = rms;
    e.value = std::clamp(value, 0.0, static_cast<double>(d));
    e.lo = std::max(0.0, e.value - 2.0 * rms);
    e.hi = std::min(static_cast<double>(d), e.value + 2.0 * rms);
}

}  // namespace

std::vector<ScalePair> default_ladder(const PointCloud& cloud) {
    std::vector<ScalePair> out;
    const double diam = cloud.diameter();
    if (!(diam > 0.0)) return out;
    const double res = std::isnan(cloud.resolution) ? 0.0 : cloud.resolution;
    for (int i = 1; i <= 3; ++i) {
        const double R = diam * std::ldexp(1.0, -i);
        std::vector<ScalePair> rows;
        for (int k = 2; k <= 12; ++k) {
            const double r = R * std::ldexp(1.0, -k);
            if (r < 4.0 * res) break;
            rows.push_back({R, r});
        }
        if (rows.size() >= 2) out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

DimensionEstimate assouad_two_scale(const PointCloud& cloud, const std::vector<ScalePair>& ladder) {
    if (cloud.points.empty()) fail(ErrorCode::Domain, "assouad_two_scale needs a non-empty cloud");
    if (ladder.empty()) fail(ErrorCode::Domain, "empty scale ladder");
    for (const auto& sp : ladder) {
        if (!(sp.r > 0.0 && sp.r < sp.R)) fail(ErrorCode::Domain, "ladder rows need 0 < r < R");
        if (!(cloud.resolution * 4.0 <= sp.r * (1.0 + 1e-12)))
            fail(ErrorCode::Resolution, "ladder scale r = " + std::to_string(sp.r) +
                                            " is not resolved by the cloud (resolution " +
                                            std::to_string(cloud.resolution) + ", need r >= 4*resolution)");
    }
    std::map<double, std::vector<double>, std::greater<>> by_R;
    for (const auto& sp : ladder) by_R[sp.R].push_back(sp.r);

    DimensionEstimate e;
    e.method = "assouad-two-scale";
    double best = -std::numeric_limits<double>::infinity();
    double best_rms = 0.0;
    for (auto& [R, rs] : by_R) {
        std::sort(rs.begin(), rs.end(), std::greater<>());
        rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
        const auto centers = separated_net(cloud.points, R / 2.0).centers;
        CoveringCounter cc(cloud.points, R);
        const auto rows = kernels::parallel::covering_counts(cc, centers, R, rs);
        std::vector<double> x, y;
        for (std::size_t j = 0; j < rs.size(); ++j) {
            int m = 0;
            std::size_t arg = 0;
            for (const auto& row : rows)
                if (row.counts[j] > m) {
                    m = row.counts[j];
                    arg = row.center;
                }
            e.rows.push_back({R, rs[j], m, centers[arg]});
            x.push_back(std::log(R / rs[j]));
            y.push_back(std::log(static_cast<double>(std::max(m, 1))));
        }
        if (x.size() < 2) continue;
        const Fit f = least_squares(x, y);
        e.slopes.emplace_back(R, f.slope);
        if (f.slope > best) {
            best = f.slope;
            best_rms = f.rms;
        }
    }
    if (e.slopes.empty()) fail(ErrorCode::Domain, "every R in the ladder needs at least two r values");
    finish(e, best, best_rms, cloud.dim);
    return e;
}

std::vector<double> default_box_scales(const PointCloud& cloud) {
    std::vector<double> out;
    const double diam = cloud.diameter();
    const double res = std::isnan(cloud.resolution) ? 0.0 : cloud.resolution;
    for (int k = 2; k <= 12; ++k) {
        const double eps = diam * std::ldexp(1.0, -k);
        if (eps < 4.0 * res) break;
        out.push_back(eps);
    }
    return out;
}

DimensionEstimate box_dimension(const PointCloud& cloud, const std::vector<double>& scales) {
    if (cloud.points.empty()) fail(ErrorCode::Domain, "box_dimension needs a non-empty cloud");
    if (scales.size() < 2) fail(ErrorCode::Domain, "box_dimension needs at least two scales");
    const Box b = cloud.bounding_box();
    DimensionEstimate e;
    e.method = "box";
    std::vector<double> x, y;
    for (double eps : scales) {
        if (!(eps > 0.0)) fail(ErrorCode::Domain, "box scales must be positive");
        std::set<std::array<std::int64_t, kMaxDim>> cells;
        for (const auto& p : cloud.points) {
            std::array<std::int64_t, kMaxDim> key{};
            for (int i = 0; i < cloud.dim; ++i)
                key[i] = static_cast<std::int64_t>(std::floor((p(i) - b.lo(i)) / eps));
            cells.insert(key);
        }
        e.rows.push_back({eps, eps, static_cast<int>(cells.size()), Vec::Zero(cloud.dim)});
        x.push_back(std::log(1.0 / eps));
        y.push_back(std::log(static_cast<double>(cells.size())));
    }
    const Fit f = least_squares(x, y);
    e.slopes.emplace_back(0.0, f.slope);
    finish(e, f.slope, f.rms, cloud.dim);
    return e;
}

IfsSystem project_ifs(const IfsSystem& ifs, const Mat& perp) {
    const int k = static_cast<int>(perp.cols());
    if (k < 1) fail(ErrorCode::Domain, "projection onto the zero subspace");
    std::vector<Similarity> maps;
    for (const auto& s : ifs.maps()) {
        const Mat o = perp.transpose() * s.orth * perp;
        if (orthogonality_residual(o) > 1e-9)
            fail(ErrorCode::Precondition, "V is not invariant under the orthogonal parts; group-close it first");
        Similarity p(s.ratio, OrthogonalMatrix(o), Vec(perp.transpose() * s.trans));
        bool dup = false;
        for (const auto& q : maps)
            if (q.ratio == p.ratio && (q.orth - p.orth).cwiseAbs().maxCoeff() <= 1e-12 &&
                (q.trans - p.trans).cwiseAbs().maxCoeff() <= 1e-12)
                dup = true;
        if (!dup) maps.push_back(p);
    }
    return IfsSystem(std::move(maps));
}

namespace {

DimensionEstimate estimate_cloud(const PointCloud& cloud, const FormulaOptions& opts) {
    return assouad_two_scale(cloud, opts.ladder ? *opts.ladder : default_ladder(cloud));
}

// Assouad dimension of the projected attractor, recursing while the projected system
// itself fails WSP.
DimensionEstimate projected_dimension(const IfsSystem& ifs, const PointCloud& cloud, const FormulaOptions& opts,
                                      int depth, std::vector<std::string>& trace) {
    const std::string pad = "depth " + std::to_string(depth) + ": ";
    DimensionEstimate e;
    if (ifs.size() == 1) {
        trace.push_back(pad + "projected system has a single map; attractor is a point");
        e.method = "formula-2";
        return e;
    }
    if (depth <= opts.max_depth) {
        const WspVerdict v = analyze_wsp(ifs, opts.wsp);
        trace.push_back(pad + "projected system with " + std::to_string(ifs.size()) + " maps in d=" +
                        std::to_string(ifs.dim()) + ", WSP verdict " + status_name(v.status));
        if (v.status == WspStatus::FailsWitnessed) {
            const auto found = find_directions(ifs, v, cloud, opts.wsp, opts.directions);
            std::vector<Vec> dirs;
            for (const auto& f : found) dirs.push_back(f.direction);
            if (!dirs.empty()) {
                const Subspace s = span_directions(dirs, ifs.dim(), opts.rank_tol);
                const ClosureResult cl = group_closure(ifs, s, opts.closure_budget, opts.rank_tol);
                const Subspace& w = cl.subspace;
                trace.push_back(pad + "overlap subspace of dimension " + std::to_string(w.dim()));
                if (w.dim() == ifs.dim()) {
                    e.method = "formula-2";
                    e.value = e.lo = e.hi = ifs.dim();
                    return e;
                }
                const Mat perp = orthogonal_complement(w);
                const IfsSystem next = project_ifs(ifs, perp);
                const PointCloud pc = project_cloud(cloud, perp);
                DimensionEstimate inner = projected_dimension(next, pc, opts, depth + 1, trace);
                e = inner;
                e.value += w.dim();
                e.lo += w.dim();
                e.hi += w.dim();
                e.method = "formula-2";
                return e;
            }
            trace.push_back(pad + "no direction passed extraction; using the direct estimate");
        }
    }
    e = estimate_cloud(cloud, opts);
    trace.push_back(pad + "direct two-scale estimate " + std::to_string(e.value) + " (similarity dimension " +
                    std::to_string(similarity_dimension([&] {
                        std::vector<double> r;
                        for (const auto& m : ifs.maps()) r.push_back(m.ratio);
                        return r;
                    }())) +
                    ")");
    return e;
}

}  // namespace

DimensionEstimate formula_pipeline(const IfsSystem& ifs, const WspVerdict& verdict, const Subspace& v,
                                   const PointCloud& cloud, const FormulaOptions& opts) {
    const int d = ifs.dim();
    if (verdict.status != WspStatus::FailsWitnessed) {
        DimensionEstimate e = estimate_cloud(cloud, opts);
        e.trace.push_back(std::string("WSP verdict ") + status_name(verdict.status) +
                          ": reporting the direct estimate (dim_A = dim_H under WSP)");
        e.dim_v = 0;
        e.projected = e.value;
        return e;
    }
    if (v.ambient != d) fail(ErrorCode::Precondition, "subspace dimension does not match the system");
    DimensionEstimate e;
    e.method = "formula-2";
    e.dim_v = v.dim();
    if (v.dim() == d) {
        e.value = e.lo = e.hi = d;
        e.projected = 0.0;
        e.trace.push_back("dim V equals the ambient dimension; projection is a point");
        return e;
    }
    const Mat perp = orthogonal_complement(v);
    const IfsSystem pifs = project_ifs(ifs, perp);
    const PointCloud pc = project_cloud(cloud, perp);
    e.trace.push_back("projected onto V-perp: " + std::to_string(pifs.size()) + " distinct maps in d=" +
                      std::to_string(pifs.dim()));
    DimensionEstimate p = projected_dimension(pifs, pc, opts, 1, e.trace);
    e.projected = p.value;
    e.rows = p.rows;
    e.slopes = p.slopes;
    e.residual_rms = p.residual_rms;
    e.value = v.dim() + p.value;
    e.lo = v.dim() + p.lo;
    e.hi = std::min(static_cast<double>(d), v.dim() + p.hi);
    e.strict_inequality_ok = p.value > 0.0;
    if (!e.strict_inequality_ok)
        e.trace.push_back("warning: projected estimate is 0, contradicting dim V < dim_A F for dim V < d");
    return e;
}

void write_estimate_csv(std::ostream& os, const DimensionEstimate& e) {
    char buf[160];
    os << "method,value,lo,hi,dim_v,projected\n";
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%d,%.17g\n", e.method.c_str(), e.value, e.lo, e.hi, e.dim_v,
                  e.projected);
    os << buf;
    os << "R,r,count\n";
    for (const auto& row : e.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", row.R, row.r, row.count);
        os << buf;
    }
}

void write_estimate_report(std::ostream& os, const DimensionEstimate& e) {
    char buf[160];
    os << "method: " << e.method << '\n';
    std::snprintf(buf, sizeof buf, "value: %.10f\nci: [%.10f, %.10f]\n", e.value, e.lo, e.hi);
    os << buf;
    if (e.dim_v >= 0) {
        std::snprintf(buf, sizeof buf, "dim_v: %d\nprojected: %.10f\n", e.dim_v, e.projected);
        os << buf;
    }
    for (const auto& [R, s] : e.slopes) {
        std::snprintf(buf, sizeof buf, "slope R=%.6g: %.6f\n", R, s);
        os << buf;
    }
    for (const auto& t : e.trace) os << "trace: " << t << '\n';
}

}  // namespace olab
