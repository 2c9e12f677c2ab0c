#pragma once

// Hot loops in two flavours: a plain serial reference and an OpenMP version.
// Both must return bit-identical results; tests and the benchmark compare them.

#include "olab/geometry.hpp"

#include <cstdint>
#include <vector>

namespace olab {

class CoveringCounter;

namespace kernels {

struct TreeLeaves {
    std::vector<Vec> points;
    int min_depth = 0;
    int max_depth = 0;
    bool over_budget = false;
};

// One covering-count query row: center index and the maximal count per r.
struct CountRow {
    std::size_t center = 0;
    std::vector<int> counts;
};

namespace serial {
double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b);
TreeLeaves word_tree(const IfsSystem& ifs, double delta, const Vec& base, std::size_t budget);
std::vector<CountRow> covering_counts(const CoveringCounter& cc, const std::vector<Vec>& centers, double R,
                                      const std::vector<double>& rs);
}  // namespace serial

namespace parallel {
double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b);
TreeLeaves word_tree(const IfsSystem& ifs, double delta, const Vec& base, std::size_t budget);
std::vector<CountRow> covering_counts(const CoveringCounter& cc, const std::vector<Vec>& centers, double R,
                                      const std::vector<double>& rs);
}  // namespace parallel

int max_threads();
void set_threads(int n);

}  // namespace kernels
}  // namespace olab
