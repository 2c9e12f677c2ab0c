#include "olab/builtins.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace olab {

namespace {

// Σ_{k≥k0} base^(−2^k), summed smallest term first once the terms underflow.
double lacunary_sum(double base, int k0) {
    std::vector<double> terms;
    for (int k = k0; k < 64; ++k) {
        const double t = std::pow(base, -std::ldexp(1.0, k));
        if (t == 0.0) break;
        terms.push_back(t);
    }
    double s = 0.0;
    for (auto it = terms.rbegin(); it != terms.rend(); ++it) s += *it;
    return s;
}

Similarity fifth(double bx, double by) {
    return Similarity(0.2, Mat(Mat::Identity(2, 2)), Vec((Vec(2) << bx, by).finished()));
}

Similarity scaled(double c, const Vec& b) { return Similarity(c, Mat(Mat::Identity(b.size(), b.size())), b); }

Vec v1(double x) { return (Vec(1) << x).finished(); }
Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }
Vec v3(double x, double y, double z) { return (Vec(3) << x, y, z).finished(); }

// The six maps of the planar example, indexed 1..6.
Similarity fifths_map(int i) {
    switch (i) {
        case 1: return fifth(0.0, 0.0);
        case 2: return fifth(0.8, 0.0);
        case 3: return fifth(0.0, 0.8);
        case 4: return fifth(constant_t() / 5.0, 0.0);
        case 5: return fifth(0.0, constant_u() / 5.0);
        case 6: return fifth(0.5, constant_u() / 5.0);
    }
    fail(ErrorCode::Domain, "no such map");
}

IfsSystem pick(std::initializer_list<int> idx) {
    std::vector<Similarity> maps;
    std::vector<std::string> labels;
    for (int i : idx) {
        maps.push_back(fifths_map(i));
        labels.push_back("S" + std::to_string(i));
    }
    return IfsSystem(std::move(maps), std::move(labels));
}

const std::map<std::string, IfsSystem (*)()>& registry() {
    static const std::map<std::string, IfsSystem (*)()> r = {
        {"F1", [] { return pick({1, 2, 3, 4}); }},
        {"F2", [] { return pick({1, 2, 3, 4, 5}); }},
        {"F3", [] { return pick({1, 2, 3, 4, 6}); }},
        {"F1-horizontal", [] { return pick({1, 2, 4}); }},
        {"F2-vertical", [] { return pick({1, 3, 5}); }},
        {"F3-projected", [] {
             return IfsSystem({scaled(0.2, v1(0.0)), scaled(0.2, v1(0.8)), scaled(0.2, v1(constant_u() / 5.0))});
         }},
        {"unit-interval-overlap", [] {
             return IfsSystem({scaled(0.5, v1(0.0)), scaled(0.5, v1(0.5)), scaled(0.5, v1(constant_a() / 2.0))});
         }},
        {"dyadic-interval", [] { return IfsSystem({scaled(0.5, v1(0.0)), scaled(0.5, v1(0.5))}); }},
        {"cantor-fifths", [] { return IfsSystem({scaled(0.2, v1(0.0)), scaled(0.2, v1(0.8))}); }},
        {"unit-square", [] {
             return IfsSystem({scaled(0.5, v2(0, 0)), scaled(0.5, v2(0.5, 0)), scaled(0.5, v2(0, 0.5)),
                               scaled(0.5, v2(0.5, 0.5))});
         }},
        {"rotation-1rad", [] {
             return IfsSystem({Similarity(1.0 / 3.0, OrthogonalMatrix::rotation2d(1.0), v2(0, 0)),
                               scaled(1.0 / 3.0, v2(2.0 / 3.0, 0))});
         }},
        {"rotation-axis-3d", [] {
             return IfsSystem({Similarity(1.0 / 3.0, OrthogonalMatrix::axis_angle(v3(0, 0, 1), 1.0), v3(0, 0, 0)),
                               scaled(1.0 / 3.0, v3(0, 0, 2.0 / 3.0))});
         }},
        {"rotation-quarter", [] {
             return IfsSystem({Similarity(0.25, OrthogonalMatrix::rotation2d(std::numbers::pi / 2), v2(0, 0)),
                               scaled(0.25, v2(0.75, 0)), scaled(0.25, v2(0, 0.75))});
         }},
    };
    return r;
}

}  // namespace

double constant_t() { return 4.0 * lacunary_sum(5.0, 0); }
double constant_u() { return 4.0 - 4.0 * lacunary_sum(5.0, 1); }
double constant_a() { return lacunary_sum(2.0, 1); }

std::vector<std::string> builtin_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
}

IfsSystem builtin(const std::string& name) {
    auto it = registry().find(name);
    if (it == registry().end()) {
        std::string all;
        for (const auto& n : builtin_names()) all += (all.empty() ? "" : ", ") + n;
        fail(ErrorCode::UnknownName, "unknown builtin '" + name + "'; available: " + all);
    }
    return it->second();
}

std::vector<std::string> gd_builtin_names() { return {"gd-demo", "gd-f1", "gd-cantor-loop", "gd-rotated"}; }

GdSystem gd_builtin(const std::string& name) {
    const double third = 1.0 / 3.0;
    if (name == "gd-demo") {
        // Two vertices, all four edges with ratio 1/3.
        return GdSystem(2, {{0, 0, scaled(third, v1(0))},
                            {0, 1, scaled(third, v1(2 * third))},
                            {1, 0, scaled(third, v1(0))},
                            {1, 1, scaled(third, v1(2 * third))}});
    }
    if (name == "gd-f1") {
        // {S1, S2, S4} as loops at vertex 1, joined to vertex 2 by S3 and back by S1.
        return GdSystem(2,
                        {{0, 0, fifths_map(1)},
                         {0, 0, fifths_map(2)},
                         {0, 0, fifths_map(4)},
                         {0, 1, fifths_map(3)},
                         {1, 0, fifths_map(1)}},
                        {"S1", "S2", "S4", "S3", "S1'"});
    }
    if (name == "gd-cantor-loop") {
        return GdSystem(1, {{0, 0, scaled(third, v1(0))}, {0, 0, scaled(third, v1(2 * third))}});
    }
    if (name == "gd-rotated") {
        // The horizontal overlap at vertex 1; the edge into vertex 2 carries a quarter turn.
        return GdSystem(2, {{0, 0, fifths_map(1)},
                            {0, 0, fifths_map(2)},
                            {0, 0, fifths_map(4)},
                            {0, 1, Similarity(0.2, OrthogonalMatrix::rotation2d(std::numbers::pi / 2), v2(0.5, 0.5))},
                            {1, 0, fifths_map(1)}});
    }
    std::string all;
    for (const auto& n : gd_builtin_names()) all += (all.empty() ? "" : ", ") + n;
    fail(ErrorCode::UnknownName, "unknown graph-directed builtin '" + name + "'; available: " + all);
}

std::vector<CombDirection> builtin_comb_directions(const std::string& name, int s) {
    const IfsSystem ifs = builtin(name);
    auto lac = [&](Letter lb, Letter la, Letter dig, int k0, const char* label) {
        auto f = std::make_shared<LacunaryFamily>(ifs, lb, la, dig, Letter{0}, k0, label);
        return CombDirection{f->member(0).unit, f, std::make_shared<SwappedFamily>(f)};
    };
    std::vector<CombDirection> dirs;
    if (name == "F1-horizontal") {
        dirs.push_back(lac(2, 0, 1, 0, "t-lacunary"));
    } else if (name == "F1" || name == "F3") {
        dirs.push_back(lac(3, 0, 1, 0, "t-lacunary"));
    } else if (name == "F2") {
        dirs.push_back(lac(3, 0, 1, 0, "t-lacunary"));
        dirs.push_back(lac(2, 4, 2, 1, "u-lacunary"));
    } else if (name == "F2-vertical") {
        dirs.push_back(lac(1, 2, 1, 1, "u-lacunary"));
    } else if (name == "unit-interval-overlap") {
        dirs.push_back(lac(2, 0, 1, 1, "a-lacunary"));
    } else if (name == "unit-square") {
        for (const Vec& u : {v2(1, 0), v2(0, 1)}) {
            auto f = std::make_shared<SyntheticTranslationFamily>(u, 0.5, Word({0}));
            auto b = std::make_shared<SyntheticTranslationFamily>(Vec(-u), 0.5, Word({0}));
            dirs.push_back(CombDirection{u, f, b});
        }
    } else {
        fail(ErrorCode::Precondition, "builtin '" + name + "' has no comb families");
    }
    if (s < 1 || s > static_cast<int>(dirs.size()))
        fail(ErrorCode::Precondition, "builtin '" + name + "' provides " + std::to_string(dirs.size()) +
                                          " comb direction(s), asked for s = " + std::to_string(s));
    dirs.resize(s);
    return dirs;
}

}  // namespace olab
