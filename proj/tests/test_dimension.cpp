#include "olab/builtins.hpp"
#include "olab/dimension.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace olab;

namespace {

const double kLog2Log5 = std::log(2.0) / std::log(5.0);

Mat column(double x, double y) {
    Mat b(2, 1);
    b << x, y;
    return b;
}

}  // namespace

TEST_CASE("similarity dimension") {
    const auto ratios = [](const IfsSystem& ifs) {
        std::vector<double> r;
        for (const auto& m : ifs.maps()) r.push_back(m.ratio);
        return r;
    };
    CHECK(std::abs(similarity_dimension(ratios(builtin("F1"))) - 0.8613531161) <= 1e-10);
    CHECK(std::abs(similarity_dimension(ratios(builtin("F1"))) - std::log(4.0) / std::log(5.0)) <= 1e-14);
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> c(0.01, 0.7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> r(1 + trial % 6);
        for (auto& x : r) x = c(rng);
        const double s = similarity_dimension(r);
        double sum = 0.0;
        for (double x : r) sum += std::pow(x, s);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(similarity_dimension({}), Error);
}

TEST_CASE("two-scale estimates on self-similar clouds") {
    const PointCloud dyadic = sample_word_tree(builtin("dyadic-interval"), std::ldexp(1.0, -14));
    const DimensionEstimate d = assouad_two_scale(dyadic, default_ladder(dyadic));
    CHECK(std::abs(d.value - 1.0) <= 0.05);
    CHECK(d.lo <= d.value);
    CHECK(d.value <= d.hi);

    const PointCloud f1 = sample_word_tree(builtin("F1"), std::pow(5.0, -6));
    const PointCloud py = project_cloud(f1, column(0, 1));
    const DimensionEstimate p = assouad_two_scale(py, default_ladder(py));
    CHECK(std::abs(p.value - kLog2Log5) <= 0.05);

    const PointCloud cantor = sample_word_tree(builtin("cantor-fifths"), std::pow(5.0, -8));
    CHECK(std::abs(assouad_two_scale(cantor, default_ladder(cantor)).value - kLog2Log5) <= 0.05);
}

TEST_CASE("ladders respect the cloud resolution") {
    const PointCloud f1 = sample_word_tree(builtin("F1"), std::pow(5.0, -4));
    for (const auto& s : default_ladder(f1)) {
        CHECK(s.r >= 4 * f1.resolution);
        CHECK(s.r < s.R);
    }
    try {
        assouad_two_scale(f1, {{0.5, f1.resolution / 2}, {0.5, f1.resolution / 4}});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Resolution);
    }
}

TEST_CASE("box dimension") {
    const PointCloud sq = sample_word_tree(builtin("unit-square"), std::ldexp(1.0, -8));
    CHECK(std::abs(box_dimension(sq, default_box_scales(sq)).value - 2.0) <= 0.1);
    const PointCloud cantor = sample_word_tree(builtin("cantor-fifths"), std::pow(5.0, -8));
    CHECK(std::abs(box_dimension(cantor, default_box_scales(cantor)).value - kLog2Log5) <= 0.1);
}

TEST_CASE("projected systems") {
    const IfsSystem f1 = builtin("F1");
    const IfsSystem py = project_ifs(f1, column(0, 1));
    CHECK(py.size() == 2);  // S1, S2, S4 collapse onto one map
    const IfsSystem f3 = project_ifs(builtin("F3"), column(0, 1));
    CHECK(f3.size() == 3);
    CHECK_THROWS_AS(project_ifs(builtin("rotation-1rad"), column(0, 1)), Error);
}

TEST_CASE("formula pipeline on the planar example") {
    const IfsSystem ifs = builtin("F1");
    const PointCloud cloud = sample_word_tree(ifs, std::pow(5.0, -6));
    FormulaOptions o;
    o.wsp.max_len = 9;
    const WspVerdict v = analyze_wsp(ifs, o.wsp);
    const auto dirs = find_directions(ifs, v, cloud, o.wsp);
    REQUIRE(dirs.size() == 1);
    const Subspace s = group_closure(ifs, span_directions({dirs.front().direction}, 2)).subspace;
    const DimensionEstimate e = formula_pipeline(ifs, v, s, cloud, o);
    CHECK(e.dim_v == 1);
    CHECK(e.value >= 1.38);
    CHECK(e.value <= 1.48);
    CHECK(e.strict_inequality_ok);
    CHECK(e.lo <= e.value);
    CHECK(e.hi <= 2.0);
}

TEST_CASE("formula pipeline short-circuits") {
    // Whole space: exactly d.
    const IfsSystem f1 = builtin("F1");
    const PointCloud cloud = sample_word_tree(f1, std::pow(5.0, -4));
    WspVerdict forced;
    forced.status = WspStatus::FailsWitnessed;
    const DimensionEstimate whole = formula_pipeline(f1, forced, Subspace::whole(2), cloud);
    CHECK(whole.value == 2.0);
    CHECK(whole.lo == 2.0);
    CHECK(whole.hi == 2.0);
    // No witnessed failure: the direct estimate.
    const IfsSystem sq = builtin("unit-square");
    const PointCloud sc = sample_word_tree(sq, std::ldexp(1.0, -7));
    WspVerdict holds;
    holds.status = WspStatus::HoldsLikely;
    const DimensionEstimate direct = formula_pipeline(sq, holds, Subspace::zero(2), sc);
    CHECK(direct.dim_v == 0);
    CHECK(direct.value == assouad_two_scale(sc, default_ladder(sc)).value);
}
