#include "olab/wsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace olab {

const char* status_name(WspStatus s) {
    switch (s) {
        case WspStatus::FailsWitnessed: return "fails-witnessed";
        case WspStatus::HoldsLikely: return "holds-likely";
        case WspStatus::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Word WordLevel::word(std::size_t i) const {
    auto b = letters.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(length));
    return Word(std::vector<Letter>(b, b + length));
}

WordLevel first_level(const std::vector<Similarity>& alphabet, const Vec& probe) {
    WordLevel lv;
    lv.length = 1;
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        lv.letters.push_back(static_cast<Letter>(i));
        lv.images.push_back(alphabet[i].apply(probe));
        lv.ratios.push_back(alphabet[i].ratio);
    }
    return lv;
}

WordLevel extend_level(const WordLevel& prev, const std::vector<Similarity>& alphabet) {
    WordLevel lv;
    lv.length = prev.length + 1;
    const std::size_t n = prev.size();
    lv.letters.reserve(alphabet.size() * n * static_cast<std::size_t>(lv.length));
    lv.images.reserve(alphabet.size() * n);
    lv.ratios.reserve(alphabet.size() * n);
    for (std::size_t i = 0; i < alphabet.size(); ++i)
        for (std::size_t w = 0; w < n; ++w) {
            lv.letters.push_back(static_cast<Letter>(i));
            auto b = prev.letters.begin() + static_cast<std::ptrdiff_t>(w * static_cast<std::size_t>(prev.length));
            lv.letters.insert(lv.letters.end(), b, b + prev.length);
            lv.images.push_back(alphabet[i].apply(prev.images[w]));
            lv.ratios.push_back(alphabet[i].ratio * prev.ratios[w]);
        }
    return lv;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct PairRef {
    std::uint32_t la = 0;  // length of alpha (beta has the level length)
    std::uint32_t ia = 0;
    std::uint32_t ib = 0;
    double sup = 0.0;
};

enum class PairKind { Positive, Exact, Unresolved };

class Evaluator {
public:
    Evaluator(const PairSearchSpec& spec) : spec_(spec) {
        double b = 1.0;
        for (const auto& v : spec.cube.vertices()) b = std::max(b, v.cwiseAbs().maxCoeff());
        for (const auto& s : spec.alphabet) b = std::max(b, s.trans.cwiseAbs().maxCoeff() / (1.0 - s.ratio));
        scale_ = b;
    }

    const WordLevel& level(std::uint32_t len) const { return spec_.levels[len - 1]; }

    Similarity compose_from(const WordLevel& lv, std::size_t i, int skip) const {
        const Letter* l = lv.letters.data() + i * static_cast<std::size_t>(lv.length);
        Similarity s = Similarity::identity(static_cast<int>(spec_.probe.size()));
        for (int k = skip; k < lv.length; ++k) s = compose(s, spec_.alphabet[l[k]]);
        return s;
    }

    int common_prefix(const WordLevel& a, std::size_t ia, const WordLevel& b, std::size_t ib) const {
        const Letter* x = a.letters.data() + ia * static_cast<std::size_t>(a.length);
        const Letter* y = b.letters.data() + ib * static_cast<std::size_t>(b.length);
        int p = 0;
        while (p < a.length && p < b.length && x[p] == y[p]) ++p;
        return p;
    }

    // Sup-norm of Φ for the pair plus its classification against the rounding floor.
    std::pair<double, PairKind> sup(std::uint32_t la, std::size_t ia, std::uint32_t lb, std::size_t ib) const {
        const WordLevel& a = level(la);
        const WordLevel& b = level(lb);
        double s;
        if (spec_.translation_closed_form) {
            s = ((b.images[ib] - a.images[ia]) / a.ratios[ia]).norm();
        } else {
            const int p = common_prefix(a, ia, b, ib);
            s = defect_of_maps(compose_from(a, ia, p), compose_from(b, ib, p), spec_.cube).sup_norm;
        }
        if (s == 0.0) return {s, PairKind::Exact};
        if (s <= tolerance(std::max(la, lb), a.ratios[ia])) return {s, PairKind::Unresolved};
        return {s, PairKind::Positive};
    }

    // Rounding floor for a defect built from words of length L, magnified by 1/c_α.
    double tolerance(std::uint32_t len, double ratio_alpha) const {
        return 16.0 * static_cast<double>(len) * kEps * scale_ / ratio_alpha;
    }

private:
    const PairSearchSpec& spec_;
    double scale_ = 1.0;
};

bool pair_less(const PairRef& x, const PairRef& y, const PairSearchSpec& spec, std::uint32_t L) {
    if (x.sup != y.sup) return x.sup < y.sup;
    const WordLevel& ax = spec.levels[x.la - 1];
    const WordLevel& ay = spec.levels[y.la - 1];
    const Letter* px = ax.letters.data() + static_cast<std::size_t>(x.ia) * ax.length;
    const Letter* py = ay.letters.data() + static_cast<std::size_t>(y.ia) * ay.length;
    if (std::lexicographical_compare(px, px + ax.length, py, py + ay.length)) return true;
    if (std::lexicographical_compare(py, py + ay.length, px, px + ax.length)) return false;
    const WordLevel& b = spec.levels[L - 1];
    const Letter* qx = b.letters.data() + static_cast<std::size_t>(x.ib) * L;
    const Letter* qy = b.letters.data() + static_cast<std::size_t>(y.ib) * L;
    return std::lexicographical_compare(qx, qx + L, qy, qy + L);
}

bool cert_less(const DefectCertificate& x, const DefectCertificate& y) {
    if (x.sup_norm != y.sup_norm) return x.sup_norm < y.sup_norm;
    if (x.alpha != y.alpha) return x.alpha < y.alpha;
    return x.beta < y.beta;
}

DefectCertificate certificate_from_pair(const PairSearchSpec& spec, const Evaluator& ev, const PairRef& p,
                                        std::uint32_t L) {
    const WordLevel& a = spec.levels[p.la - 1];
    const WordLevel& b = spec.levels[L - 1];
    DefectCertificate c;
    c.alpha = a.word(p.ia);
    c.beta = b.word(p.ib);
    c.ratio_alpha = a.ratios[p.ia];
    c.ratio_beta = b.ratios[p.ib];
    const int d = static_cast<int>(spec.probe.size());
    if (spec.translation_closed_form) {
        c.phi.linear = Mat::Zero(d, d);
        c.phi.offset = (b.images[p.ib] - a.images[p.ia]) / a.ratios[p.ia];
        c.sup_norm = c.phi.offset.norm();
        c.op_norm = 0.0;
        const Similarity sa = ev.compose_from(a, p.ia, 0);
        const Similarity sb = ev.compose_from(b, p.ib, 0);
        c.raw_gap = (sb.trans - sa.trans).norm();
    } else {
        const int pre = ev.common_prefix(a, p.ia, b, p.ib);
        auto r = defect_of_maps(ev.compose_from(a, p.ia, pre), ev.compose_from(b, p.ib, pre), spec.cube);
        c.phi = r.phi;
        c.sup_norm = r.sup_norm;
        c.op_norm = r.op_norm;
    }
    c.base_point = spec.cube.center();
    return c;
}

}  // namespace

// A new floor record must drop by more than the rounding of deep compositions, which
// reaches ~1e-9 relative at length 8 for ratio 1/5.
constexpr double kRecordMargin = 1.0 - 1e-6;

void grade_verdict(WspVerdict& v, const WspOptions& opts) {
    v.witness_chain.clear();
    double best = kInf;
    double last = kInf;
    bool all_large = true;
    for (const auto& f : v.floors) {
        if (f.floor < kRecordMargin * best) {
            best = f.floor;
            v.witness_chain.push_back(f.length);
            last = f.floor;
        }
        if (f.floor < opts.holds_threshold) all_large = false;
    }
    if (v.witness_chain.size() >= 3 && last < opts.witness_threshold) v.status = WspStatus::FailsWitnessed;
    else if (!v.budget_exhausted && all_large && !v.floors.empty()) v.status = WspStatus::HoldsLikely;
    else v.status = WspStatus::Inconclusive;
}

WspVerdict run_pair_search(PairSearchSpec spec, const WspOptions& opts) {
    if (opts.max_len < 2) fail(ErrorCode::Precondition, "WSP search needs max_len >= 2");
    WspVerdict v;
    v.cube = spec.cube;
    const double hd = 0.5 * spec.cube.diameter();
    const std::size_t k = std::max<std::size_t>(1, opts.evidence_per_length);
    std::size_t used = 0;
    std::vector<PairRef> kept_all;
    std::vector<std::uint32_t> kept_level;

    for (std::uint32_t L = 1; L <= static_cast<std::uint32_t>(opts.max_len); ++L) {
        if (spec.levels.size() < L) {
            if (!spec.auto_extend) break;
            const WordLevel& prev = spec.levels.back();
            const double next = static_cast<double>(prev.size()) * static_cast<double>(spec.alphabet.size());
            if (used + static_cast<std::size_t>(std::min(next, 1e18)) > opts.budget) {
                v.budget_exhausted = true;
                v.notes.push_back("stopped before length " + std::to_string(L) + ": level size " +
                                  std::to_string(static_cast<std::size_t>(next)) + " exceeds remaining budget");
                break;
            }
            spec.levels.push_back(extend_level(prev, spec.alphabet));
            if (spec.equal_length_only && L >= 3) {
                // Only the current level and its parent are needed from here on.
                WordLevel& old = spec.levels[L - 3];
                old = WordLevel{old.length, {}, {}, {}};
            }
        }
        const Evaluator ev(spec);
        const WordLevel& lvB = spec.levels[L - 1];
        const std::size_t nB = lvB.size();
        LengthFloor floor{static_cast<int>(L), kInf, 0, 0, 0};
        if (nB == 0) {
            v.floors.push_back(floor);
            continue;
        }
        PointGrid grid(lvB.images, PointGrid::suggest_cell(lvB.images, 1.0));

        // Phase 1: nearest image neighbours give k finite candidates and a pruning threshold.
        std::vector<std::pair<std::uint32_t, std::uint32_t>> seeds(nB);
        const long nBl = static_cast<long>(nB);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < nBl; ++i) {
            auto nn = grid.nearest(lvB.images[i], static_cast<std::size_t>(i));
            if (nn.first == PointGrid::npos) {
                seeds[i] = {UINT32_MAX, UINT32_MAX};
                continue;
            }
            const auto a = static_cast<std::uint32_t>(std::min<std::size_t>(i, nn.first));
            const auto b = static_cast<std::uint32_t>(std::max<std::size_t>(i, nn.first));
            seeds[i] = {a, b};
        }
        std::sort(seeds.begin(), seeds.end());
        seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
        if (!seeds.empty() && seeds.back().first == UINT32_MAX) seeds.pop_back();
        if (used + seeds.size() > opts.budget) {
            v.budget_exhausted = true;
            v.notes.push_back("budget exhausted before length " + std::to_string(L));
            break;
        }
        used += seeds.size();
        std::vector<PairRef> seeded(seeds.size());
        std::vector<char> seeded_ok(seeds.size(), 0);
        const long ns = static_cast<long>(seeds.size());
#pragma omp parallel for schedule(static)
        for (long i = 0; i < ns; ++i) {
            auto [s, kind] = ev.sup(L, seeds[i].first, L, seeds[i].second);
            seeded[i] = PairRef{L, seeds[i].first, seeds[i].second, s};
            seeded_ok[i] = kind == PairKind::Positive;
        }
        std::vector<PairRef> kept;
        for (std::size_t i = 0; i < seeded.size(); ++i)
            if (seeded_ok[i]) kept.push_back(seeded[i]);
        double tau = kInf;
        if (kept.size() >= k) {
            std::vector<double> s;
            for (const auto& p : kept) s.push_back(p.sup);
            std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k - 1), s.end());
            tau = s[k - 1];
        }
        for (const auto& p : kept) floor.floor = std::min(floor.floor, p.sup);

        // Phase 2: every pair that could beat tau, found through the image grid.
        bool truncated = false;
        const std::uint32_t la_first = spec.equal_length_only ? L : 1;
        for (std::uint32_t la = la_first; la <= L && !truncated; ++la) {
            const WordLevel& lvA = spec.levels[la - 1];
            const std::size_t nA = lvA.size();
            if (nA == 0) continue;
            auto candidates = [&](std::size_t ia, auto&& emit) {
                const double ca = lvA.ratios[ia];
                auto consider = [&](std::size_t ib) {
                    if (la == L && ib <= ia) return;
                    if (std::abs(lvB.ratios[ib] / ca - 1.0) * hd >= tau && !spec.translation_closed_form) return;
                    emit(ib);
                };
                if (std::isinf(tau)) {
                    for (std::size_t ib = 0; ib < nB; ++ib) consider(ib);
                } else {
                    const double radius = ca * tau * (1.0 + 1e-9) + 4.0 * ev.tolerance(L, 1.0);
                    grid.for_each_in_ball(lvA.images[ia], radius, consider);
                }
            };
            if (spec.translation_closed_form && la != L) continue;
            if (std::isinf(tau) && static_cast<double>(nA) * static_cast<double>(nB) >
                                       2.0 * static_cast<double>(opts.budget - std::min(used, opts.budget))) {
                // Unpruned sweep cannot fit in what is left; do not even count it.
                truncated = true;
                break;
            }
            std::vector<std::size_t> counts(nA, 0);
            const long nAl = static_cast<long>(nA);
#pragma omp parallel for schedule(dynamic, 256)
            for (long ia = 0; ia < nAl; ++ia) {
                std::size_t c = 0;
                candidates(static_cast<std::size_t>(ia), [&](std::size_t) { ++c; });
                counts[ia] = c;
            }
            std::size_t cutoff = nA;
            std::size_t total = 0;
            for (std::size_t ia = 0; ia < nA; ++ia) {
                if (used + total + counts[ia] > opts.budget) {
                    cutoff = ia;
                    truncated = true;
                    break;
                }
                total += counts[ia];
            }
            used += total;
            const long cut = static_cast<long>(cutoff);
#pragma omp parallel
            {
                std::vector<PairRef> local;
                std::size_t exact = 0, unresolved = 0;
                double fl = kInf;
                std::vector<std::pair<std::uint32_t, std::uint32_t>> exact_local;
#pragma omp for schedule(dynamic, 256) nowait
                for (long ia = 0; ia < cut; ++ia) {
                    candidates(static_cast<std::size_t>(ia), [&](std::size_t ib) {
                        auto [s, kind] = ev.sup(la, static_cast<std::size_t>(ia), L, ib);
                        if (kind == PairKind::Exact) {
                            ++exact;
                            if (exact_local.size() < 8)
                                exact_local.emplace_back(static_cast<std::uint32_t>(ia), static_cast<std::uint32_t>(ib));
                            return;
                        }
                        if (kind == PairKind::Unresolved) {
                            ++unresolved;
                            return;
                        }
                        fl = std::min(fl, s);
                        if (s <= tau)
                            local.push_back(PairRef{la, static_cast<std::uint32_t>(ia), static_cast<std::uint32_t>(ib), s});
                    });
                }
#pragma omp critical
                {
                    kept.insert(kept.end(), local.begin(), local.end());
                    floor.exact_overlaps += exact;
                    floor.unresolved += unresolved;
                    floor.floor = std::min(floor.floor, fl);
                    for (auto [ia, ib] : exact_local)
                        v.exact_overlap_examples.emplace_back(lvA.word(ia), lvB.word(ib));
                }
            }
        }
        floor.pairs = used;
        std::sort(kept.begin(), kept.end(), [&](const PairRef& x, const PairRef& y) { return pair_less(x, y, spec, L); });
        kept.erase(std::unique(kept.begin(), kept.end(),
                               [](const PairRef& x, const PairRef& y) {
                                   return x.la == y.la && x.ia == y.ia && x.ib == y.ib;
                               }),
                   kept.end());
        if (kept.size() > k) kept.resize(k);
        for (const auto& p : kept) v.evidence.push_back(certificate_from_pair(spec, ev, p, L));
        v.exact_overlaps += floor.exact_overlaps;
        v.unresolved += floor.unresolved;
        if (truncated) {
            v.budget_exhausted = true;
            v.notes.push_back("budget exhausted inside length " + std::to_string(L) + "; its floor is partial");
            break;
        }
        v.floors.push_back(floor);
    }
    v.pairs_evaluated = used;
    std::sort(v.evidence.begin(), v.evidence.end(), cert_less);
    std::sort(v.exact_overlap_examples.begin(), v.exact_overlap_examples.end());
    v.exact_overlap_examples.erase(std::unique(v.exact_overlap_examples.begin(), v.exact_overlap_examples.end()),
                                   v.exact_overlap_examples.end());
    if (v.exact_overlap_examples.size() > 32) v.exact_overlap_examples.resize(32);
    if (v.unresolved > 0)
        v.notes.push_back(std::to_string(v.unresolved) +
                          " pairs fell below the double-precision rounding floor and were excluded");
    grade_verdict(v, opts);
    return v;
}

WspVerdict search_defects(const IfsSystem& ifs, const WspOptions& opts) {
    PairSearchSpec spec;
    spec.alphabet = ifs.maps();
    spec.cube = opts.cube ? *opts.cube : fixed_point_cube(ifs);
    spec.probe = spec.cube.center();
    spec.levels.push_back(first_level(spec.alphabet, spec.probe));
    spec.auto_extend = true;
    auto v = run_pair_search(std::move(spec), opts);
    v.method = "search_defects";
    return v;
}

WspVerdict homogeneous_search(const IfsSystem& ifs, const WspOptions& opts) {
    if (!ifs.homogeneous_identity()) {
        auto v = search_defects(ifs, opts);
        v.notes.push_back("homogeneous_search precondition failed (ratios differ or rotations present); "
                          "fell back to search_defects");
        return v;
    }
    PairSearchSpec spec;
    spec.alphabet = ifs.maps();
    spec.cube = opts.cube ? *opts.cube : fixed_point_cube(ifs);
    spec.probe = Vec::Zero(ifs.dim());
    spec.levels.push_back(first_level(spec.alphabet, spec.probe));
    spec.auto_extend = true;
    spec.equal_length_only = true;
    spec.translation_closed_form = true;
    auto v = run_pair_search(std::move(spec), opts);
    v.method = "homogeneous_search";
    return v;
}

WspVerdict analyze_wsp(const IfsSystem& ifs, const WspOptions& opts) {
    return ifs.homogeneous_identity() ? homogeneous_search(ifs, opts) : search_defects(ifs, opts);
}

DefectCertificate make_certificate(const IfsSystem& ifs, const Word& alpha, const Word& beta, const Box& cube) {
    auto r = defect(ifs, alpha, beta, cube);
    DefectCertificate c;
    c.alpha = alpha;
    c.beta = beta;
    c.phi = r.phi;
    c.sup_norm = r.sup_norm;
    c.op_norm = r.op_norm;
    c.ratio_alpha = compose(ifs, alpha).ratio;
    c.ratio_beta = compose(ifs, beta).ratio;
    c.base_point = cube.center();
    return c;
}

DefectCertificate swap_certificate(const IfsSystem& ifs, const DefectCertificate& c, const Box& cube) {
    return make_certificate(ifs, c.beta, c.alpha, cube);
}

namespace {

double angle_between(const Vec& a, const Vec& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return kInf;
    const double cosv = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    const double sinv = (a / na - (a.dot(b) / (na * nb)) * (b / nb)).norm();
    return std::atan2(sinv, cosv);
}

}  // namespace

ExtractionResult extract_direction(const std::vector<DefectCertificate>& certs, const PointCloud& cloud,
                                   const ExtractOptions& opts) {
    if (certs.size() < 3) fail(ErrorCode::Precondition, "extract_direction needs at least 3 certificates");
    for (std::size_t i = 1; i < certs.size(); ++i)
        if (!(certs[i].sup_norm < certs[i - 1].sup_norm))
            fail(ErrorCode::Precondition, "certificate sup-norms must be strictly decreasing");
    if (cloud.points.empty()) fail(ErrorCode::Precondition, "extract_direction needs a non-empty cloud");

    const double diam = std::max(cloud.diameter(), 1e-300);
    const std::size_t stride = std::max<std::size_t>(1, cloud.points.size() / std::max<std::size_t>(1, opts.max_base_points));
    std::vector<Vec> bases;
    for (std::size_t i = 0; i < cloud.points.size() && bases.size() < opts.max_base_points; i += stride)
        bases.push_back(cloud.points[i]);

    ExtractionResult res;
    std::size_t best_count = 0;
    double best_rho = 0.0;
    Vec best_a;
    std::vector<std::size_t> best_kept;
    for (int i = 0; i <= opts.rho_steps && best_count < certs.size(); ++i) {
        const double rho = diam * std::ldexp(1.0, -i);
        for (const auto& a : bases) {
            std::vector<std::size_t> kept;
            for (std::size_t q = 0; q < certs.size(); ++q) {
                auto m = min_norm_on_ball(certs[q].phi, a, rho);
                if (rho * certs[q].op_norm <= m.value && m.value > 0.0) kept.push_back(q);
            }
            if (kept.size() > best_count) {
                best_count = kept.size();
                best_kept = kept;
                best_rho = rho;
                best_a = a;
                if (best_count == certs.size()) break;
            }
        }
    }

    const bool ok = best_count >= 3;
    if (!ok) {
        best_a = bases.front();
        best_rho = diam;
        best_kept.resize(certs.size());
        std::iota(best_kept.begin(), best_kept.end(), 0);
        res.diagnostics = "no (a, rho) on the ladder retained 3 certificates; best retained " +
                          std::to_string(best_count);
    }
    for (auto q : best_kept) {
        Vec u = certs[q].phi.apply(best_a);
        const double n = u.norm();
        if (n > 0.0) res.iterates.push_back(u / n);
    }
    res.retained = best_kept;
    DefectCertificate c = certs[best_kept.back()];
    c.base_point = best_a;
    c.rho = best_rho;
    auto m = min_norm_on_ball(c.phi, best_a, best_rho);
    c.a_min = m.argmin;
    c.min_value = m.value;
    c.technical_ok = ok;
    if (res.iterates.size() >= 3) {
        const std::size_t n = res.iterates.size();
        const Vec& x = res.iterates[n - 3];
        const Vec& y = res.iterates[n - 2];
        const Vec& z = res.iterates[n - 1];
        res.converged = angle_between(x, y) <= opts.angle_tol && angle_between(y, z) <= opts.angle_tol &&
                        angle_between(x, z) <= opts.angle_tol;
        Vec mean = x + y + z;
        if (mean.norm() > 0.0) c.direction = Vec(mean / mean.norm());
        if (!res.converged) res.diagnostics += (res.diagnostics.empty() ? "" : "; ") +
                                               std::string("last three iterates not within the angular tolerance");
    } else if (!res.iterates.empty()) {
        c.direction = res.iterates.back();
    }
    res.certificate = c;
    return res;
}

std::vector<DirectionFinding> find_directions(const IfsSystem& ifs, const WspVerdict& verdict,
                                              const PointCloud& cloud, const WspOptions& wsp,
                                              const DirectionOptions& opts) {
    std::vector<DirectionFinding> out;
    if (verdict.evidence.empty() || cloud.points.empty()) return out;
    // Reference point: cloud point nearest to the centroid.
    Vec centroid = Vec::Zero(cloud.dim);
    for (const auto& p : cloud.points) centroid += p;
    centroid /= static_cast<double>(cloud.points.size());
    Vec ref = cloud.points.front();
    for (const auto& p : cloud.points)
        if ((p - centroid).norm() < (ref - centroid).norm()) ref = p;

    struct Cluster {
        Vec rep;
        std::vector<std::size_t> members;
    };
    std::vector<Cluster> clusters;
    const double cos_tol = std::cos(opts.cluster_angle);
    for (std::size_t i = 0; i < verdict.evidence.size(); ++i) {
        Vec u = verdict.evidence[i].phi.apply(ref);
        if (u.norm() == 0.0) continue;
        u /= u.norm();
        bool placed = false;
        for (auto& c : clusters)
            if (std::abs(u.dot(c.rep)) >= cos_tol) {
                c.members.push_back(i);
                placed = true;
                break;
            }
        if (!placed) clusters.push_back({u, {i}});
    }

    for (const auto& cl : clusters) {
        // Best certificate per length, then the strictly decreasing record chain.
        std::vector<const DefectCertificate*> best_by_len;
        for (auto i : cl.members) {
            const auto& c = verdict.evidence[i];
            const auto len = static_cast<std::size_t>(c.length());
            if (best_by_len.size() < len) best_by_len.resize(len, nullptr);
            auto& slot = best_by_len[len - 1];
            if (!slot || cert_less(c, *slot)) slot = &c;
        }
        std::vector<DefectCertificate> chain;
        for (auto* c : best_by_len)
            if (c && (chain.empty() || c->sup_norm < kRecordMargin * chain.back().sup_norm)) chain.push_back(*c);
        if (chain.size() < 3 || !(chain.back().sup_norm < wsp.witness_threshold)) continue;
        // Sign alignment: swapped pairs carry the opposite direction.
        const Vec u0 = chain.back().phi.apply(ref);
        for (auto& c : chain)
            if (c.phi.apply(ref).dot(u0) < 0.0) {
                DefectCertificate s = swap_certificate(ifs, c, verdict.cube);
                s.raw_gap = c.raw_gap;
                c = s;
            }
        // Swapping rescales by c_α/c_β, which may break strict decrease; rebuild the records.
        std::vector<DefectCertificate> strict;
        for (auto& c : chain)
            if (strict.empty() || c.sup_norm < kRecordMargin * strict.back().sup_norm) strict.push_back(c);
        if (strict.size() < 3) continue;
        DirectionFinding f;
        f.chain = strict;
        f.extraction = extract_direction(strict, cloud, opts.extract);
        if (!f.extraction.certificate.direction) continue;
        f.direction = *f.extraction.certificate.direction;
        out.push_back(std::move(f));
    }
    return out;
}

void write_evidence_csv(std::ostream& os, const std::vector<DefectCertificate>& certs) {
    int d = 0;
    for (const auto& c : certs) d = std::max(d, static_cast<int>(c.phi.offset.size()));
    os << "len_alpha,len_beta,sup_norm,op_norm";
    for (int i = 0; i < d; ++i) os << ",dir" << i;
    os << ",technical_ok,alpha,beta,raw_gap\n";
    char buf[64];
    for (const auto& c : certs) {
        os << c.alpha.size() << ',' << c.beta.size();
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", c.sup_norm, c.op_norm);
        os << buf;
        for (int i = 0; i < d; ++i) {
            if (c.direction) {
                std::snprintf(buf, sizeof buf, ",%.17g", (*c.direction)(i));
                os << buf;
            } else {
                os << ',';
            }
        }
        os << ',' << (c.technical_ok ? 1 : 0) << ',' << c.alpha.str() << ',' << c.beta.str() << ',';
        if (c.raw_gap) {
            std::snprintf(buf, sizeof buf, "%.17g", *c.raw_gap);
            os << buf;
        }
        os << '\n';
    }
}

void write_floors_csv(std::ostream& os, const WspVerdict& v) {
    os << "length,floor,pairs_cumulative,exact_overlaps,unresolved\n";
    char buf[64];
    for (const auto& f : v.floors) {
        std::snprintf(buf, sizeof buf, "%.17g", f.floor);
        os << f.length << ',' << buf << ',' << f.pairs << ',' << f.exact_overlaps << ',' << f.unresolved << '\n';
    }
}

void write_certificate_block(std::ostream& os, const DefectCertificate& c) {
    char buf[96];
    os << "certificate\n";
    os << "  alpha: " << c.alpha.str() << "\n  beta: " << c.beta.str() << '\n';
    std::snprintf(buf, sizeof buf, "  sup_norm: %.17g\n  op_norm: %.17g\n", c.sup_norm, c.op_norm);
    os << buf;
    os << "  offset: " << format_vec(c.phi.offset) << '\n';
    os << "  direction: " << (c.direction ? format_vec(*c.direction) : std::string("absent")) << '\n';
    if (c.base_point.size() > 0) os << "  base_point: " << format_vec(c.base_point) << '\n';
    std::snprintf(buf, sizeof buf, "  rho: %.17g\n", c.rho);
    os << buf;
    os << "  technical_ok: " << (c.technical_ok ? "true" : "false") << '\n';
}

void write_verdict_report(std::ostream& os, const WspVerdict& v) {
    os << "status: " << status_name(v.status) << '\n';
    os << "method: " << v.method << '\n';
    os << "pairs_evaluated: " << v.pairs_evaluated << '\n';
    os << "budget_exhausted: " << (v.budget_exhausted ? "true" : "false") << '\n';
    os << "exact_overlaps: " << v.exact_overlaps << '\n';
    os << "witness_chain_lengths:";
    for (int l : v.witness_chain) os << ' ' << l;
    os << '\n';
    char buf[64];
    os << "floors:\n";
    for (const auto& f : v.floors) {
        std::snprintf(buf, sizeof buf, "%.6e", f.floor);
        os << "  " << f.length << ": " << buf << '\n';
    }
    for (const auto& n : v.notes) os << "note: " << n << '\n';
    for (const auto& [a, b] : v.exact_overlap_examples) os << "exact_overlap: " << a.str() << " ~ " << b.str() << '\n';
    for (const auto& c : v.evidence) write_certificate_block(os, c);
}

}  // namespace olab
