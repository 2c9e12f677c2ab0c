// Serial reference versus OpenMP kernels on F1 samples.

#include "olab/builtins.hpp"
#include "olab/kernels.hpp"
#include "olab/sampler.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

using namespace olab;

const IfsSystem& f1() {
    static const IfsSystem ifs = builtin("F1");
    return ifs;
}

const std::vector<Vec>& cloud(int k) {
    static std::vector<std::vector<Vec>> cache(8);
    if (cache[k].empty()) cache[k] = sample_word_tree(f1(), std::pow(5.0, -k)).points;
    return cache[k];
}

template <auto Fn>
void word_tree(benchmark::State& st) {
    const double delta = std::pow(5.0, -static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(Fn(f1(), delta, Vec::Zero(2), 50'000'000).points.size());
}

template <auto Fn>
void directed_hausdorff(benchmark::State& st) {
    const auto& a = cloud(4);
    const auto& b = cloud(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(Fn(a, b));
}

template <auto Fn>
void covering_counts(benchmark::State& st) {
    const auto& pts = cloud(static_cast<int>(st.range(0)));
    const CoveringCounter cc(pts, 0.05);
    std::vector<Vec> centers(pts.begin(), pts.begin() + std::min<std::size_t>(pts.size(), 200));
    for (auto _ : st) benchmark::DoNotOptimize(Fn(cc, centers, 0.05, {0.01, 0.005}).size());
}

}  // namespace

BENCHMARK(word_tree<kernels::serial::word_tree>)->Name("word_tree/serial")->DenseRange(5, 7);
BENCHMARK(word_tree<kernels::parallel::word_tree>)->Name("word_tree/parallel")->DenseRange(5, 7);
BENCHMARK(directed_hausdorff<kernels::serial::directed_hausdorff>)->Name("hausdorff/serial")->DenseRange(5, 6);
BENCHMARK(directed_hausdorff<kernels::parallel::directed_hausdorff>)->Name("hausdorff/parallel")->DenseRange(5, 6);
BENCHMARK(covering_counts<kernels::serial::covering_counts>)->Name("covering/serial")->DenseRange(5, 6);
BENCHMARK(covering_counts<kernels::parallel::covering_counts>)->Name("covering/parallel")->DenseRange(5, 6);

BENCHMARK_MAIN();
