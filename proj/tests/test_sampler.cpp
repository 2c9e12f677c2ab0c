#include "olab/builtins.hpp"
#include "olab/kernels.hpp"
#include "olab/sampler.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace olab;

namespace {

std::vector<Vec> random_points(std::mt19937_64& rng, std::size_t n, int d, double spread) {
    std::vector<Vec> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(test::random_vec(rng, d, -spread, spread));
    return out;
}

}  // namespace

TEST_CASE("word-tree point counts") {
    const IfsSystem dyadic = builtin("dyadic-interval");
    for (int k = 1; k <= 10; ++k) CHECK(sample_word_tree(dyadic, std::ldexp(1.0, -k)).size() == (1u << k));
    CHECK(sample_word_tree(builtin("F1"), std::pow(5.0, -4)).size() == 256);
}

TEST_CASE("word-tree resolution covers a deeper sample") {
    for (const char* name : {"F1", "cantor-fifths", "rotation-1rad"}) {
        const IfsSystem ifs = builtin(name);
        const PointCloud coarse = sample_word_tree(ifs, std::pow(ifs.c_max(), 3));
        const PointCloud fine = sample_word_tree(ifs, std::pow(ifs.c_max(), 6));
        CHECK(oracle::directed_hausdorff(fine.points, coarse.points) <= coarse.resolution * (1 + 1e-12));
    }
}

TEST_CASE("point budget is enforced") {
    CHECK_THROWS_AS(sample_word_tree(builtin("F1"), std::pow(5.0, -6), 100), Error);
}

TEST_CASE("chaos game is reproducible from the seed") {
    const IfsSystem ifs = builtin("F1");
    const PointCloud a = sample_chaos_game(ifs, 1000, 42);
    const PointCloud b = sample_chaos_game(ifs, 1000, 42);
    const PointCloud c = sample_chaos_game(ifs, 1000, 43);
    CHECK(a.points == b.points);
    CHECK(a.points != c.points);
    CHECK(std::isnan(a.resolution));
}

TEST_CASE("hausdorff distance matches brute force") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 3;
        const auto a = random_points(rng, 50 + trial, d, 1.0);
        const auto b = random_points(rng, 80, d, trial % 2 ? 1.0 : 3.0);
        const double h = hausdorff_distance(a, b);
        CHECK(std::abs(h - std::max(oracle::directed_hausdorff(a, b), oracle::directed_hausdorff(b, a))) <= 1e-12);
    }
}

TEST_CASE("serial and parallel kernels agree bit for bit") {
    const int saved = kernels::max_threads();
    kernels::set_threads(4);
    std::mt19937_64 rng(22);
    const auto a = random_points(rng, 3000, 2, 1.0);
    const auto b = random_points(rng, 2000, 2, 1.0);
    CHECK(kernels::serial::directed_hausdorff(a, b) == kernels::parallel::directed_hausdorff(a, b));

    for (const char* name : {"F1", "rotation-1rad", "rotation-axis-3d"}) {
        const IfsSystem ifs = builtin(name);
        const Vec base = ifs.map(0).fixed_point();
        const auto s = kernels::serial::word_tree(ifs, std::pow(ifs.c_max(), 6), base, kDefaultPointBudget);
        const auto p = kernels::parallel::word_tree(ifs, std::pow(ifs.c_max(), 6), base, kDefaultPointBudget);
        CHECK(s.points == p.points);
        CHECK(s.min_depth == p.min_depth);
        CHECK(s.max_depth == p.max_depth);
    }

    const PointCloud cloud = sample_word_tree(builtin("F1"), std::pow(5.0, -5));
    CoveringCounter cc(cloud.points, 0.25);
    const SeparatedNet net = separated_net(cloud.points, 0.125);
    const std::vector<double> rs{0.05, 0.02, 0.01};
    const auto cs = kernels::serial::covering_counts(cc, net.centers, 0.25, rs);
    const auto cp = kernels::parallel::covering_counts(cc, net.centers, 0.25, rs);
    REQUIRE(cs.size() == cp.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        CHECK(cs[i].center == cp[i].center);
        CHECK(cs[i].counts == cp[i].counts);
    }
    kernels::set_threads(saved);
}

TEST_CASE("local covering counts match a greedy brute-force net") {
    std::mt19937_64 rng(23);
    const auto pts = random_points(rng, 400, 2, 1.0);
    CoveringCounter cc(pts, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec x = test::random_vec(rng, 2);
        const int fast = local_covering_count(pts, x, 0.5, 0.1);
        CHECK(cc.count(x, 0.5, 0.1) == fast);
        // Greedy r-separated net over the ball points in lexicographic order.
        std::vector<Vec> ball;
        for (const auto& p : cc.sorted())
            if ((p - x).norm() <= 0.5) ball.push_back(p);
        std::vector<Vec> net;
        for (const auto& p : ball) {
            bool covered = false;
            for (const auto& q : net) covered = covered || (p - q).norm() < 0.1;
            if (!covered) net.push_back(p);
        }
        CHECK(static_cast<int>(net.size()) == fast);
    }
}

TEST_CASE("cloud csv round trip is exact") {
    const PointCloud cloud = sample_word_tree(builtin("F1"), std::pow(5.0, -3));
    const std::string path = "olab_test_cloud.csv";
    write_cloud_csv(path, cloud);
    const PointCloud back = read_cloud_csv(path);
    CHECK(back.points == cloud.points);
    std::remove(path.c_str());
}

TEST_CASE("projection keeps coordinates in the basis") {
    const PointCloud cloud = sample_word_tree(builtin("F1"), std::pow(5.0, -3));
    Mat b(2, 1);
    b << 0, 1;
    const PointCloud p = project_cloud(cloud, b);
    CHECK(p.dim == 1);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.points[i](0) == cloud.points[i](1));
}
