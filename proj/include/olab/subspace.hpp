#pragma once

#include "olab/geometry.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace olab {

struct Subspace {
    int ambient = 0;
    Mat basis;  // ambient × dim, orthonormal columns
    bool rank_uncertain = false;

    int dim() const { return static_cast<int>(basis.cols()); }
    static Subspace zero(int d);
    static Subspace whole(int d);
};

Subspace span_directions(const std::vector<Vec>& directions, int d, double tol = 1e-6);

struct ClosureStep {
    int iteration = 0;
    std::size_t generator = 0;  // index into the deduplicated generator list
    bool inverse = false;
    int new_dim = 0;
};

struct ClosureResult {
    Subspace subspace;
    std::vector<ClosureStep> trace;
    int iterations = 0;
    bool stable = false;
};

ClosureResult group_closure(const std::vector<Mat>& generators, const Subspace& v, int budget = 32,
                            double tol = 1e-6);
ClosureResult group_closure(const IfsSystem& ifs, const Subspace& v, int budget = 32, double tol = 1e-6);

// Distinct orthogonal parts of the maps, in map order.
std::vector<Mat> orthogonal_generators(const IfsSystem& ifs);

// max ‖P_V⊥ O v‖ over generators O (and inverses) and basis vectors v.
double invariance_residual(const std::vector<Mat>& generators, const Subspace& v);

struct Projectors {
    Mat p;      // onto V
    Mat p_perp; // onto V⊥
};

Projectors projectors(const Subspace& v);
// Orthonormal basis of V⊥ as columns (ambient × (ambient − dim)).
Mat orthogonal_complement(const Subspace& v);

struct RotationClass {
    bool finite = false;
    long p = 0;
    long q = 1;      // angle = π p / q when finite
    long order = 0;  // 0 for numerically dense
};

// Convergent errors shrink like 1/q², so q stays well below 1/sqrt(tol) to keep irrationals dense.
RotationClass classify_rotation(double angle, long max_denominator = 10'000, double tol = 1e-12);

struct GroupEnumeration {
    std::vector<Mat> elements;
    std::vector<Word> words;  // shortest, lexicographically first word realizing each element
    bool finite = false;
};

GroupEnumeration enumerate_group(const IfsSystem& ifs, std::size_t cap = 4096, double tol = 1e-9);

void write_subspace_report(std::ostream& os, const ClosureResult& r);

}  // namespace olab
