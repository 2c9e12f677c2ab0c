#include "olab/geometry.hpp"
#include "olab/linalg.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace olab;

TEST_CASE("compose agrees with sequential application") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + trial % 3;
        const Similarity a = test::random_similarity(rng, d);
        const Similarity b = test::random_similarity(rng, d);
        const Similarity ab = compose(a, b);
        for (int k = 0; k < 5; ++k) {
            const Vec x = test::random_vec(rng, d, -3, 3);
            CHECK((ab.apply(x) - a.apply(b.apply(x))).norm() <= 1e-12);
        }
        CHECK(ab.ratio == doctest::Approx(a.ratio * b.ratio).epsilon(1e-15));
    }
}

TEST_CASE("invert undoes the map") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Similarity s = test::random_similarity(rng, 2);
        const Vec x = test::random_vec(rng, 2);
        CHECK((invert(s).apply(s.apply(x)) - x).norm() <= 1e-12);
    }
}

TEST_CASE("word composition follows the letter order") {
    IfsSystem ifs({Similarity(0.5, Mat(Mat::Identity(1, 1)), (Vec(1) << 0.0).finished()),
                   Similarity(0.5, Mat(Mat::Identity(1, 1)), (Vec(1) << 0.5).finished())});
    const Word w = Word::from_one_based({2, 1, 2});
    CHECK(w.str() == "2.1.2");
    const Similarity s = compose(ifs, w);
    Vec x = (Vec(1) << 0.3).finished();
    const Vec expect = ifs.map(1).apply(ifs.map(0).apply(ifs.map(1).apply(x)));
    CHECK(std::abs(s.apply(x)(0) - expect(0)) <= 1e-15);
    CHECK_THROWS_AS(Word::from_one_based({0}), Error);
}

TEST_CASE("min_norm_on_ball matches a dense-grid oracle") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> sv(0.2, 2.0), rad(0.05, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + trial % 3;
        Mat sigma = Mat::Zero(d, d);
        for (int i = 0; i < d; ++i) sigma(i, i) = sv(rng);
        AffineMap phi{test::random_orthogonal(rng, d) * sigma * test::random_orthogonal(rng, d),
                      test::random_vec(rng, d, -2, 2)};
        const Vec c = test::random_vec(rng, d);
        const double r = rad(rng);
        const BallMinimum m = min_norm_on_ball(phi, c, r);
        CHECK((m.argmin - c).norm() <= r * (1 + 1e-12));
        CHECK(std::abs(m.value - phi.apply(m.argmin).norm()) <= 1e-12);
        CHECK(std::abs(m.value - oracle::grid_min_norm(phi, c, r)) <= 1e-5);
    }
}

TEST_CASE("defect of a translation pair is the normalised gap") {
    // S_α⁻¹∘S_β − I for pure translations with common ratio c is (b_β − b_α)/c.
    IfsSystem ifs({Similarity(0.2, Mat(Mat::Identity(2, 2)), (Vec(2) << 0, 0).finished()),
                   Similarity(0.2, Mat(Mat::Identity(2, 2)), (Vec(2) << 0.8, 0).finished())});
    const Box cube = fixed_point_cube(ifs);
    const DefectResult r = defect(ifs, Word({0}), Word({1}), cube);
    CHECK(r.phi.is_constant());
    CHECK(r.sup_norm == doctest::Approx(4.0).epsilon(1e-14));
    // A shared prefix cancels.
    const DefectResult p = defect(ifs, Word({1, 0}), Word({1, 1}), cube);
    CHECK(p.sup_norm == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("orthogonal matrices are validated") {
    Mat bad(2, 2);
    bad << 1, 0.1, 0, 1;
    CHECK_THROWS_AS(OrthogonalMatrix{bad}, Error);
    const OrthogonalMatrix q = OrthogonalMatrix::rotation2d(0.7);
    CHECK(orthogonality_residual(q.matrix()) <= 1e-15);
    CHECK(q.proper());
}

TEST_CASE("fixed_point_cube contains the attractor") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Similarity> maps;
        for (int i = 0; i < 3; ++i) maps.push_back(test::random_similarity(rng, 2));
        IfsSystem ifs(maps);
        const Box b = fixed_point_cube(ifs);
        for (std::size_t i = 0; i < ifs.size(); ++i) CHECK(b.contains(ifs.map(i).fixed_point(), 1e-12));
        const Box t = attractor_box(ifs);
        for (std::size_t i = 0; i < ifs.size(); ++i) CHECK(t.contains(ifs.map(i).fixed_point(), 1e-9));
    }
}
