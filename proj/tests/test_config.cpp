#include "olab/builtins.hpp"
#include "olab/config.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace olab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("olab_test_" + name);
    fs::remove_all(p);
    return p;
}

RunResult run_text(const std::string& yaml, const fs::path& out, std::optional<int> threads = std::nullopt) {
    RunOverrides o;
    o.output = out.string();
    o.threads = threads;
    return run_experiment(parse_config(yaml), o);
}

}  // namespace

TEST_CASE("series constants") {
    CHECK(std::floor(constant_t() * 1e4) / 1e4 == doctest::Approx(0.9664).epsilon(1e-12));
    CHECK(std::floor(constant_u() * 1e4) / 1e4 == doctest::Approx(3.8335).epsilon(1e-12));
    // t = 4(1/5 + 1/25 + 1/625 + ...), directly.
    double t = 0.0;
    for (int k = 0; k < 6; ++k) t += 4.0 * std::pow(5.0, -std::pow(2.0, k));
    CHECK(constant_t() == doctest::Approx(t).epsilon(1e-15));
    CHECK(constant_u() == doctest::Approx(4.0 - (t - 0.8)).epsilon(1e-15));
}

TEST_CASE("builtin library") {
    const IfsSystem f1 = builtin("F1");
    REQUIRE(f1.size() == 4);
    for (const auto& m : f1.maps()) {
        CHECK(m.ratio == 0.2);
        CHECK(m.orth.isIdentity(0.0));
    }
    CHECK(f1.map(3).trans(0) == constant_t() / 5.0);
    CHECK(builtin("F1-horizontal").size() == 3);
    try {
        builtin("F9");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownName);
        CHECK(std::string(e.what()).find("F1-horizontal") != std::string::npos);
    }
}

TEST_CASE("number forms") {
    CHECK(parse_number("5^-6") == std::pow(5.0, -6));
    CHECK(parse_number("0x1.8p-3") == 0.1875);
    CHECK(parse_number("1/3") == 1.0 / 3.0);
    CHECK(parse_number(" 0.25 ") == 0.25);
    CHECK_THROWS_AS(parse_number("abc"), Error);
    CHECK_THROWS_AS(parse_number("1/0"), Error);
}

TEST_CASE("config round trip") {
    const std::string inline_ifs = R"(
system:
  maps:
    - {ratio: 1/3, rotation: 1, translation: [0, 0]}
    - {ratio: 0.3, rotation: {matrix: [[0, -1], [1, 0]]}, translation: [0.5, 1/7]}
seed: 9
threads: 2
output: somewhere
tasks:
  - sample: {delta: 3^-5}
  - wsp: {max_len: 5}
  - directions
)";
    const std::string inline_gd = R"(
system:
  vertices: 2
  edges:
    - {from: 1, to: 2, ratio: 1/3, translation: [0]}
    - {from: 2, to: 1, ratio: 1/3, translation: [2/3], label: back}
    - {from: 1, to: 1, ratio: 1/5, translation: [0.1]}
tasks:
  - gd: {max_len: 4}
)";
    for (const std::string& text : {inline_ifs, inline_gd, std::string("system: F1\ntasks: []\n")}) {
        const ExperimentConfig a = parse_config(text);
        const std::string once = serialize_config(a);
        const ExperimentConfig b = parse_config(once);
        CHECK(serialize_config(b) == once);
        CHECK(a.tasks.size() == b.tasks.size());
        if (a.ifs) {
            REQUIRE(b.ifs);
            for (std::size_t i = 0; i < a.ifs->size(); ++i) {
                CHECK(a.ifs->map(i).ratio == b.ifs->map(i).ratio);
                CHECK(a.ifs->map(i).orth == b.ifs->map(i).orth);
                CHECK(a.ifs->map(i).trans == b.ifs->map(i).trans);
            }
        }
        if (a.gd) {
            REQUIRE(b.gd);
            CHECK(a.gd->labels() == b.gd->labels());
            for (std::size_t i = 0; i < a.gd->edges().size(); ++i)
                CHECK(a.gd->edges()[i].map.trans == b.gd->edges()[i].map.trans);
        }
    }
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config("tasks: []\n"), Error);
    CHECK_THROWS_AS(parse_config("system: F1\ncolour: red\n"), Error);
    CHECK_THROWS_AS(parse_config("system: F1\ntasks:\n  - wsp: {maxlen: 3}\n"), Error);
    CHECK_THROWS_AS(parse_config("system: F1\ntasks:\n  - paint\n"), Error);
    CHECK_THROWS_AS(parse_config("system:\n  maps:\n    - {ratio: 0.5, translation: [0, 0]}\n    - {ratio: 0.5, translation: [1]}\n"),
                    Error);
    CHECK_THROWS_AS(parse_config("system: [unclosed\n"), Error);
}

TEST_CASE("empty task list") {
    const fs::path out = scratch("empty");
    const RunResult r = run_text("system: F1\ntasks: []\n", out);
    CHECK(r.exit_code == 0);
    CHECK(fs::is_directory(out));
    CHECK(fs::is_empty(out));
}

TEST_CASE("exit codes name the task and module") {
    const RunResult small_n = run_text("system: F1-horizontal\ntasks:\n  - tangent: {n: 10}\n", scratch("n10"));
    CHECK(small_n.exit_code == 2);
    CHECK(small_n.message.find("task 1 (tangent, module tangent-builder)") != std::string::npos);

    const RunResult order = run_text("system: F1\ntasks:\n  - formula\n", scratch("order"));
    CHECK(order.exit_code == 2);
    CHECK(order.message.find("sample") != std::string::npos);

    const RunResult unseeded = run_text("system: F1\ntasks:\n  - sample: {method: chaos-game}\n", scratch("seedless"));
    CHECK(unseeded.exit_code == 2);
    CHECK(unseeded.message.find("seed") != std::string::npos);

    const fs::path pairs = scratch("pairs");
    const RunResult budget = run_text("system: F1\ntasks:\n  - wsp: {max_len: 8, budget: 500}\n", pairs);
    CHECK(budget.exit_code == 3);
    CHECK(fs::exists(pairs / "floors.csv"));

    const RunResult points = run_text("system: F1\ntasks:\n  - sample: {delta: 5^-6, budget: 100}\n", scratch("points"));
    CHECK(points.exit_code == 3);
}

TEST_CASE("reruns are byte-identical across thread counts") {
    const std::string yaml = R"(
system: F1
seed: 5
tasks:
  - sample: {delta: 5^-5}
  - wsp: {max_len: 9}
  - directions
  - subspace
  - formula
  - dim: {method: assouad}
  - dim: {method: box}
  - sample: {method: chaos-game, points: 5000}
  - tangent: {n: 14, family: lacunary, family_samples: 10}
)";
    const fs::path a = scratch("threads1"), b = scratch("threads4");
    const RunResult ra = run_text(yaml, a, 1);
    const RunResult rb = run_text(yaml, b, 4);
    CHECK(ra.exit_code == 0);
    CHECK(rb.exit_code == 0);
    CHECK(ra.files == rb.files);
    CHECK(!ra.files.empty());
    for (const auto& f : ra.files) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
}

TEST_CASE("thread resolution") {
    CHECK(resolve_threads(3) == 3);
    CHECK_THROWS_AS(resolve_threads(0), Error);
    setenv("OVERLAP_LAB_THREADS", "2", 1);
    CHECK(resolve_threads(std::nullopt) == 2);
    unsetenv("OVERLAP_LAB_THREADS");
}
