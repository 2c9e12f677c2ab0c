#include "olab/builtins.hpp"
#include "olab/subspace.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace olab;

namespace {

Vec unit(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v.normalized();
}

}  // namespace

TEST_CASE("a 1-radian rotation closes a line to the plane") {
    const IfsSystem ifs = builtin("rotation-1rad");
    const ClosureResult r = group_closure(ifs, span_directions({unit({1, 0})}, 2));
    CHECK(r.subspace.dim() == 2);
    CHECK(r.iterations <= 2);
    CHECK(r.stable);
}

TEST_CASE("a rotation about the seed axis keeps the line") {
    const IfsSystem ifs = builtin("rotation-axis-3d");
    const ClosureResult r = group_closure(ifs, span_directions({unit({0, 0, 1})}, 3));
    CHECK(r.subspace.dim() == 1);
    CHECK(std::abs(std::abs(r.subspace.basis(2, 0)) - 1.0) <= 1e-12);
    CHECK(invariance_residual(orthogonal_generators(ifs), r.subspace) <= 1e-12);
}

TEST_CASE("an off-axis seed in 3d grows to the invariant plane plus the seed") {
    const IfsSystem ifs = builtin("rotation-axis-3d");
    const ClosureResult r = group_closure(ifs, span_directions({unit({1, 0, 0})}, 3));
    CHECK(r.subspace.dim() == 2);
    const ClosureResult all = group_closure(ifs, span_directions({unit({1, 0, 1})}, 3));
    CHECK(all.subspace.dim() == 3);
}

TEST_CASE("closure output is invariant and contains the seed") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 2 + trial % 3;
        std::vector<Mat> gens{test::random_orthogonal(rng, d)};
        const Vec seed = test::random_vec(rng, d).normalized();
        const ClosureResult r = group_closure(gens, span_directions({seed}, d));
        CHECK(invariance_residual(gens, r.subspace) <= 1e-6);
        const Projectors p = projectors(r.subspace);
        CHECK((p.p * seed - seed).norm() <= 1e-9);
        CHECK((r.subspace.basis.transpose() * r.subspace.basis - Mat::Identity(r.subspace.dim(), r.subspace.dim()))
                  .norm() <= 1e-12);
    }
}

TEST_CASE("span of dependent directions") {
    const Subspace s = span_directions({unit({1, 0}), unit({-1, 0}), unit({1, 1e-12})}, 2);
    CHECK(s.dim() == 1);
    CHECK_THROWS_AS(span_directions({Vec((Vec(2) << 2, 0).finished())}, 2), Error);
}

TEST_CASE("orthogonal complement and projectors") {
    const Subspace s = span_directions({unit({1, 1, 0})}, 3);
    const Mat perp = orthogonal_complement(s);
    CHECK(perp.cols() == 2);
    CHECK((s.basis.transpose() * perp).norm() <= 1e-14);
    const Projectors p = projectors(s);
    CHECK((p.p + p.p_perp - Mat::Identity(3, 3)).norm() <= 1e-14);
}

TEST_CASE("rotation classification") {
    const RotationClass quarter = classify_rotation(std::numbers::pi / 2);
    CHECK(quarter.finite);
    CHECK(quarter.order == 4);
    const RotationClass sixth = classify_rotation(2 * std::numbers::pi / 6);
    CHECK(sixth.finite);
    CHECK(sixth.order == 6);
    CHECK(!classify_rotation(1.0).finite);
    CHECK(classify_rotation(0.0).order == 1);
}

TEST_CASE("finite rotation groups are enumerated") {
    const GroupEnumeration g = enumerate_group(builtin("rotation-quarter"));
    CHECK(g.finite);
    CHECK(g.elements.size() == 4);
    const IfsSystem ifs = builtin("rotation-quarter");
    for (std::size_t k = 0; k < g.elements.size(); ++k) {
        Mat m = Mat::Identity(2, 2);
        for (Letter l : g.words[k].letters) m = m * ifs.map(l).orth;
        CHECK((m - g.elements[k]).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const GroupEnumeration dense = enumerate_group(builtin("rotation-1rad"), 64);
    CHECK(!dense.finite);
}
