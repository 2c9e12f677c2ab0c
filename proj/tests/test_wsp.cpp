#include "olab/builtins.hpp"
#include "olab/wsp.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace olab;

namespace {

// Minimal normalised gap |S_β(0) − S_α(0)| / c^L over equal-length word pairs of a homogeneous
// translation system, computed by direct summation over all words.
std::vector<double> brute_floors(const std::vector<double>& b, double c, int max_len) {
    std::vector<double> out;
    std::vector<long double> level{0.0L};
    for (int L = 1; L <= max_len; ++L) {
        std::vector<long double> next;
        // S_{iw}(0) = c·S_w(0) + b_i
        for (double bi : b)
            for (long double x : level) next.push_back(c * x + bi);
        level = std::move(next);
        std::vector<long double> sorted = level;
        std::sort(sorted.begin(), sorted.end());
        long double best = INFINITY;
        const long double scale = std::pow(static_cast<long double>(c), L);
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            const long double gap = sorted[i] - sorted[i - 1];
            if (gap > 1e-15L * scale) best = std::min(best, gap);
        }
        out.push_back(static_cast<double>(best / scale));
    }
    return out;
}

double angle(const Vec& a, const Vec& b) {
    return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

}  // namespace

TEST_CASE("horizontal floors match direct summation") {
    const IfsSystem ifs = builtin("F1-horizontal");
    WspOptions o;
    o.max_len = 7;
    const WspVerdict v = analyze_wsp(ifs, o);
    const auto oracle = brute_floors({0.0, 0.8, constant_t() / 5.0}, 0.2, 7);
    REQUIRE(v.floors.size() == 7);
    for (int L = 1; L <= 7; ++L) CHECK(v.floors[L - 1].floor == doctest::Approx(oracle[L - 1]).epsilon(1e-6));
}

TEST_CASE("horizontal floors, frozen values") {
    // Lengths 1, 2, 3, 5 and 9 carry the strict records.
    const IfsSystem ifs = builtin("F1-horizontal");
    WspOptions o;
    o.max_len = 9;
    const WspVerdict v = analyze_wsp(ifs, o);
    REQUIRE(v.floors.size() == 9);
    const std::map<int, double> frozen = {{1, 0.96641024002621445}, {2, 0.83205120013107159},
                                          {3, 0.16025600065535867}, {5, 0.0064000163839568443},
                                          {9, 1.0239964258473839e-05}};
    for (const auto& [L, f] : frozen) CHECK(v.floors[L - 1].floor == doctest::Approx(f).epsilon(1e-6));
    CHECK(v.witness_chain == std::vector<int>{1, 2, 3, 5, 9});
    CHECK(v.status == WspStatus::FailsWitnessed);
    CHECK(!v.budget_exhausted);
}

TEST_CASE("length 8 alone does not reach the witness threshold") {
    WspOptions o;
    o.max_len = 8;
    const WspVerdict v = analyze_wsp(builtin("F1-horizontal"), o);
    CHECK(v.floors.back().floor > o.witness_threshold);
    CHECK(v.status == WspStatus::Inconclusive);
}

TEST_CASE("strictly separated systems hold") {
    WspOptions o;
    o.max_len = 8;
    CHECK(analyze_wsp(builtin("cantor-fifths"), o).status == WspStatus::HoldsLikely);
    CHECK(analyze_wsp(builtin("dyadic-interval"), o).status == WspStatus::HoldsLikely);
    CHECK(analyze_wsp(builtin("unit-square"), o).status == WspStatus::HoldsLikely);
}

TEST_CASE("exact overlaps are counted, not used as floors") {
    // S3∘S1 = S1∘S2 for x/2, x/2 + 1/2, x/2 + 1/4.
    const Mat id = Mat::Identity(1, 1);
    IfsSystem ifs({Similarity(0.5, id, (Vec(1) << 0.0).finished()), Similarity(0.5, id, (Vec(1) << 0.5).finished()),
                   Similarity(0.5, id, (Vec(1) << 0.25).finished())});
    WspOptions o;
    o.max_len = 5;
    const WspVerdict v = analyze_wsp(ifs, o);
    CHECK(v.exact_overlaps > 0);
    CHECK(!v.exact_overlap_examples.empty());
    for (const auto& f : v.floors) CHECK(f.floor > 0.0);
}

TEST_CASE("pair budget exhaustion is reported") {
    WspOptions o;
    o.max_len = 9;
    o.budget = 2000;
    const WspVerdict v = analyze_wsp(builtin("F1"), o);
    CHECK(v.budget_exhausted);
    CHECK(v.status != WspStatus::HoldsLikely);
}

TEST_CASE("common prefixes do not change the defect") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Similarity> maps;
        for (int i = 0; i < 3; ++i) maps.push_back(test::random_similarity(rng, 2));
        IfsSystem ifs(maps);
        const Box cube = fixed_point_cube(ifs);
        const Word a({0, 1}), b({2, 0});
        const DefectResult plain = defect(ifs, a, b, cube);
        const DefectResult pre = defect(ifs, Word({1}).concat(a), Word({1}).concat(b), cube);
        CHECK(pre.sup_norm == doctest::Approx(plain.sup_norm).epsilon(1e-9));
    }
}

TEST_CASE("swapping a translation pair negates the defect") {
    const IfsSystem ifs = builtin("F1");
    const Box cube = fixed_point_cube(ifs);
    const DefectCertificate c = make_certificate(ifs, Word({0, 1}), Word({3, 0}), cube);
    const DefectCertificate s = swap_certificate(ifs, c, cube);
    CHECK((c.phi.offset + s.phi.offset).norm() <= 1e-12);
    CHECK(s.sup_norm == doctest::Approx(c.sup_norm).epsilon(1e-12));
}

TEST_CASE("overlapping direction and its opposite") {
    const IfsSystem ifs = builtin("F1-horizontal");
    const PointCloud cloud = sample_word_tree(ifs, std::pow(5.0, -6));
    WspOptions o;
    o.max_len = 9;
    const WspVerdict v = analyze_wsp(ifs, o);
    const auto found = find_directions(ifs, v, cloud, o);
    REQUIRE(found.size() == 1);
    const Vec& w = found.front().direction;
    CHECK(std::abs(w(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w(1) == 0.0);
    // Chain records strictly decrease.
    const auto& chain = found.front().chain;
    for (std::size_t i = 1; i < chain.size(); ++i) CHECK(chain[i].sup_norm < chain[i - 1].sup_norm);

    std::vector<DefectCertificate> swapped;
    for (const auto& c : chain) swapped.push_back(swap_certificate(ifs, c, v.cube));
    const ExtractionResult r = extract_direction(swapped, cloud);
    REQUIRE(r.certificate.direction);
    CHECK(angle(*r.certificate.direction, -w) <= 1e-6);
}

TEST_CASE("extract_direction preconditions") {
    const PointCloud cloud = sample_word_tree(builtin("F1"), std::pow(5.0, -3));
    CHECK_THROWS_AS(extract_direction({}, cloud), Error);
}

TEST_CASE("evidence is ordered by defect size") {
    WspOptions o;
    o.max_len = 6;
    const WspVerdict v = analyze_wsp(builtin("F1"), o);
    for (std::size_t i = 1; i < v.evidence.size(); ++i) CHECK(v.evidence[i - 1].sup_norm <= v.evidence[i].sup_norm);
}

TEST_CASE("general search agrees with the homogeneous fast path") {
    WspOptions o;
    o.max_len = 5;
    const IfsSystem ifs = builtin("F1-horizontal");
    const WspVerdict fast = homogeneous_search(ifs, o);
    const WspVerdict slow = search_defects(ifs, o);
    REQUIRE(fast.floors.size() == slow.floors.size());
    for (std::size_t i = 0; i < fast.floors.size(); ++i)
        CHECK(fast.floors[i].floor == doctest::Approx(slow.floors[i].floor).epsilon(1e-9));
}
