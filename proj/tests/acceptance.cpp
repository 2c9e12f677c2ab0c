// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include "olab/builtins.hpp"
#include "olab/config.hpp"
#include "olab/dimension.hpp"
#include "olab/graph.hpp"
#include "olab/subspace.hpp"
#include "olab/tangent.hpp"
#include "olab/wsp.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace olab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << o.detail << std::endl;
}

std::vector<double> ratios(const IfsSystem& ifs) {
    std::vector<double> r;
    for (const auto& m : ifs.maps()) r.push_back(m.ratio);
    return r;
}

// Truncated decimal digits, as printed.
std::string digits(double x, int places) {
    const double p = std::pow(10.0, places);
    return fmt(("%." + std::to_string(places) + "f").c_str(), std::floor(x * p) / p);
}

double angle(const Vec& a, const Vec& b) {
    return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

struct FormulaRun {
    DimensionEstimate estimate;
    double seconds = 0.0;
};

FormulaRun formula(const std::string& name) {
    const auto t0 = Clock::now();
    const IfsSystem ifs = builtin(name);
    const PointCloud cloud = sample_word_tree(ifs, std::pow(5.0, -6));
    FormulaOptions o;
    o.wsp.max_len = 9;
    const WspVerdict v = analyze_wsp(ifs, o.wsp);
    std::vector<Vec> dirs;
    for (const auto& f : find_directions(ifs, v, cloud, o.wsp)) dirs.push_back(f.direction);
    const Subspace s = dirs.empty() ? Subspace::zero(ifs.dim())
                                    : group_closure(ifs, span_directions(dirs, ifs.dim())).subspace;
    FormulaRun r{formula_pipeline(ifs, v, s, cloud, o), 0.0};
    r.seconds = seconds_since(t0);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    report(1, "similarity dimension of F1", [] {
        const auto r = ratios(builtin("F1"));
        double s = 0.0;
        const auto t0 = Clock::now();
        const int reps = 1000;
        for (int i = 0; i < reps; ++i) s = similarity_dimension(r);
        const double per = seconds_since(t0) / reps;
        return Outcome{std::abs(s - 0.8613531161) <= 1e-10 && per < 1e-3,
                       fmt("%.10f", s) + " in " + fmt("%.2e", per) + " s"};
    });

    report(2, "series constants t and u", [] {
        const std::string t = digits(constant_t(), 4), u = digits(constant_u(), 4);
        return Outcome{t == "0.9664" && u == "3.8335", "t = " + t + "..., u = " + u + "..."};
    });

    report(3, "WSP failure witness for {S1, S2, S4} at length 8", [] {
        const IfsSystem ifs = builtin("F1-horizontal");
        WspOptions o;
        o.max_len = 8;
        const auto t0 = Clock::now();
        const WspVerdict v8 = analyze_wsp(ifs, o);
        const double secs8 = seconds_since(t0);
        const double floor8 = v8.floors.empty() ? INFINITY : v8.floors.back().floor;
        const bool chain_ok = v8.witness_chain.size() >= 3;
        bool pass = chain_ok && floor8 < 1e-4 && v8.pairs_evaluated <= 10'000'000 && !v8.budget_exhausted &&
                    secs8 < 120.0;
        std::string detail = "length-8 floor " + fmt("%.3e", floor8) + ", " + std::to_string(v8.witness_chain.size()) +
                             " records, " + std::to_string(v8.pairs_evaluated) + " pairs, " + fmt("%.2f", secs8) + " s";
        // The direction part and the first length that reaches the threshold.
        o.max_len = 9;
        const WspVerdict v9 = analyze_wsp(ifs, o);
        const auto dirs = find_directions(ifs, v9, sample_word_tree(ifs, std::pow(5.0, -6)), o);
        const bool dir_ok = dirs.size() == 1 && std::abs(std::abs(dirs[0].direction(0)) - 1.0) <= 1e-12 &&
                            dirs[0].direction(1) == 0.0;
        pass = pass && dir_ok;
        detail += "; length 9: floor " + fmt("%.3e", v9.floors.back().floor) + ", status " + status_name(v9.status) +
                  ", direction " + (dir_ok ? "(" + fmt("%+.0f", dirs[0].direction(0)) + ", 0)" : std::string("missing"));
        return Outcome{pass, detail};
    });

    report(4, "swapped pairs give the opposite direction", [] {
        double worst = 0.0;
        int count = 0;
        for (const char* name : {"F1-horizontal", "F1", "F2", "F3"}) {
            const IfsSystem ifs = builtin(name);
            const PointCloud cloud = sample_word_tree(ifs, std::pow(5.0, -5));
            WspOptions o;
            o.max_len = 9;
            const WspVerdict v = analyze_wsp(ifs, o);
            for (const auto& f : find_directions(ifs, v, cloud, o)) {
                std::vector<DefectCertificate> sw;
                for (const auto& c : f.chain) sw.push_back(swap_certificate(ifs, c, v.cube));
                const ExtractionResult r = extract_direction(sw, cloud);
                worst = std::max(worst, r.certificate.direction ? angle(*r.certificate.direction, -f.direction) : INFINITY);
                ++count;
            }
        }
        return Outcome{count > 0 && worst <= 1e-6,
                       std::to_string(count) + " directions, worst angle " + fmt("%.2e", worst) + " rad"};
    });

    report(5, "formula pipeline on F1, F2, F3", [] {
        const FormulaRun f1 = formula("F1"), f2 = formula("F2"), f3 = formula("F3");
        const double v1 = f1.estimate.value, v2 = f2.estimate.value, v3 = f3.estimate.value;
        const bool pass = v1 >= 1.38 && v1 <= 1.48 && v2 == 2.0 && v3 >= 1.93 && v3 <= 2.0 && f1.seconds < 300 &&
                          f2.seconds < 300 && f3.seconds < 300;
        return Outcome{pass, "F1 " + fmt("%.4f", v1) + " (" + fmt("%.1f", f1.seconds) + " s), F2 " + fmt("%.4f", v2) +
                                 " (" + fmt("%.1f", f2.seconds) + " s), F3 " + fmt("%.4f", v3) + " (" +
                                 fmt("%.1f", f3.seconds) + " s)"};
    });

    report(6, "Assouad estimator sanity", [] {
        const PointCloud f1 = sample_word_tree(builtin("F1"), std::pow(5.0, -6));
        Mat b(2, 1);
        b << 0, 1;
        const PointCloud py = project_cloud(f1, b);
        const double p = assouad_two_scale(py, default_ladder(py)).value;
        const PointCloud dy = sample_word_tree(builtin("dyadic-interval"), std::ldexp(1.0, -14));
        const double d = assouad_two_scale(dy, default_ladder(dy)).value;
        const double target = std::log(2.0) / std::log(5.0);
        return Outcome{std::abs(p - target) <= 0.05 && std::abs(d - 1.0) <= 0.05,
                       "projection " + fmt("%.4f", p) + " vs " + fmt("%.4f", target) + ", dyadic " + fmt("%.4f", d)};
    });

    report(7, "tangent comb for the horizontal subsystem", [] {
        const IfsSystem ifs = builtin("F1-horizontal");
        std::string detail;
        bool pass = true;
        for (int n : {14, 20}) {
            const auto t0 = Clock::now();
            const TangentAudit a =
                build_comb(ifs, builtin_comb_directions("F1-horizontal", 1), Vec::Zero(2), CombParams::make(n, 1, 1.0));
            const double hd = verify_tangent_distance(a);
            const double secs = seconds_since(t0);
            std::size_t ok = 0;
            const double lo = a.c_star * 0.2 * a.params.eps, hi = 3.0 * a.params.eps, cone = std::asin(a.params.eta);
            for (const auto& s : a.steps)
                ok += s.step_norm >= lo * (1 - 1e-9) && s.step_norm <= hi * (1 + 1e-9) && s.cone_angle <= cone;
            pass = pass && hd <= 1.0 / n && ok == a.steps.size() && secs < 600;
            detail += (detail.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + ": distance " +
                      fmt("%.2e", hd) + " <= " + fmt("%.4f", 1.0 / n) + ", " + std::to_string(ok) + "/" +
                      std::to_string(a.steps.size()) + " steps in bounds, " + fmt("%.2f", secs) + " s";
        }
        return Outcome{pass, detail};
    });

    report(8, "comb family relative positions", [] {
        const auto check = [](const std::string& name, double& worst) {
            const IfsSystem ifs = builtin(name);
            const CombParams p0 = CombParams::make(14, 1, 1.0);
            const double theta = p0.rho_prime / 2;
            const TangentAudit a =
                build_comb(ifs, builtin_comb_directions(name, 1), Vec::Zero(2), CombParams::make(14, 1, 1.0, theta));
            PointCloud xs;
            xs.dim = 2;
            std::mt19937_64 rng(8);
            for (int i = 0; i < 50; ++i) xs.points.push_back(test::random_vec(rng, 2, -theta / 2, theta / 2));
            const CombFamily fam = build_comb_family(ifs, a, xs, theta);
            worst = 0.0;
            for (double d : fam.max_deviation) worst = std::max(worst, d);
            return a.params.eps;
        };
        double lac = 0.0, syn = 0.0;
        const double eps = check("F1-horizontal", lac);
        check("unit-square", syn);
        return Outcome{lac < eps && syn == 0.0, "50 points: lacunary max " + fmt("%.2e", lac) + " (< eps " +
                                                    fmt("%.2e", eps) + "), synthetic max " + fmt("%.1e", syn)};
    });

    report(9, "group closure", [] {
        Vec x(2), z(3);
        x << 1, 0;
        z << 0, 0, 1;
        const ClosureResult r2 = group_closure(builtin("rotation-1rad"), span_directions({x}, 2));
        const ClosureResult r3 = group_closure(builtin("rotation-axis-3d"), span_directions({z}, 3));
        return Outcome{r2.subspace.dim() == 2 && r2.iterations <= 2 && r3.subspace.dim() == 1,
                       "1-radian: dim " + std::to_string(r2.subspace.dim()) + " after " + std::to_string(r2.iterations) +
                           " iteration(s); axial seed: dim " + std::to_string(r3.subspace.dim())};
    });

    report(10, "graph-directed systems", [] {
        const double s = gd_dimension(gd_builtin("gd-demo"));
        const IfsSystem f1 = builtin("F1");
        std::vector<GdEdge> loops;
        for (const auto& m : f1.maps()) loops.push_back({0, 0, m});
        const double one = gd_dimension(GdSystem(1, loops));
        const double sim = similarity_dimension(ratios(f1));
        WspOptions o;
        o.max_len = 9;
        const GdCrossCheck cc = gd_wsp_cross_check(gd_builtin("gd-f1"), o);
        const double target = std::log(2.0) / std::log(3.0);
        return Outcome{std::abs(s - target) <= 1e-10 && std::abs(one - sim) <= 1e-10 && cc.agree,
                       "demo " + fmt("%.10f", s) + ", one-vertex gap " + fmt("%.1e", std::abs(one - sim)) +
                           ", verdicts " + status_name(cc.verdicts.front().status) + "/" +
                           status_name(cc.verdicts.back().status)};
    });

    report(11, "oracle equivalences", [] {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> sv(0.2, 2.0), rad(0.05, 1.5);
        double ball = 0.0, hd = 0.0, comp = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const int d = 1 + trial % 3;
            Mat sigma = Mat::Zero(d, d);
            for (int i = 0; i < d; ++i) sigma(i, i) = sv(rng);
            AffineMap phi{test::random_orthogonal(rng, d) * sigma * test::random_orthogonal(rng, d),
                          test::random_vec(rng, d, -2, 2)};
            const Vec c = test::random_vec(rng, d);
            const double r = rad(rng);
            ball = std::max(ball, std::abs(min_norm_on_ball(phi, c, r).value - oracle::grid_min_norm(phi, c, r)));
        }
        for (int trial = 0; trial < 100; ++trial) {
            const int d = 1 + trial % 3;
            std::vector<Vec> a, b;
            for (int i = 0; i < 60; ++i) a.push_back(test::random_vec(rng, d));
            for (int i = 0; i < 90; ++i) b.push_back(test::random_vec(rng, d, -2, 2));
            hd = std::max(hd, std::abs(hausdorff_distance(a, b) - oracle::hausdorff(a, b)));
        }
        for (int trial = 0; trial < 200; ++trial) {
            const int d = 1 + trial % 3;
            const Similarity s = test::random_similarity(rng, d), t = test::random_similarity(rng, d);
            const Vec x = test::random_vec(rng, d, -3, 3);
            comp = std::max(comp, (compose(s, t).apply(x) - s.apply(t.apply(x))).norm());
        }
        return Outcome{ball <= 1e-5 && hd <= 1e-12 && comp <= 1e-12,
                       "ball " + fmt("%.1e", ball) + ", hausdorff " + fmt("%.1e", hd) + ", compose " + fmt("%.1e", comp)};
    });

    report(12, "determinism across thread counts", [] {
        const ExperimentConfig cfg = parse_config(R"(
system: F1
seed: 12
tasks:
  - sample: {delta: 5^-6}
  - wsp: {max_len: 9}
  - directions
  - subspace
  - formula
  - dim: {method: assouad}
  - sample: {method: chaos-game, points: 20000}
  - dim: {method: box}
  - tangent: {n: 14, family: lacunary, family_samples: 50}
)");
        const fs::path base = fs::temp_directory_path() / "olab_acceptance";
        fs::remove_all(base);
        RunOverrides a{(base / "t1").string(), std::nullopt, 1}, b{(base / "t4").string(), std::nullopt, 4};
        const RunResult ra = run_experiment(cfg, a), rb = run_experiment(cfg, b);
        std::size_t csv = 0, same = 0;
        for (const auto& f : ra.files) {
            if (fs::path(f).extension() != ".csv") continue;
            ++csv;
            same += slurp(base / "t1" / f) == slurp(base / "t4" / f);
        }
        fs::remove_all(base);
        return Outcome{ra.exit_code == 0 && rb.exit_code == 0 && csv > 0 && same == csv && ra.files == rb.files,
                       std::to_string(same) + "/" + std::to_string(csv) + " CSVs identical (1 vs 4 threads)"};
    });

    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criterion/criteria failed")
              << std::endl;
    return failures;
}
