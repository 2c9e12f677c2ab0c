#pragma once

#include "olab/sampler.hpp"
#include "olab/subspace.hpp"
#include "olab/wsp.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace olab {

struct ScalePair {
    double R = 0.0;
    double r = 0.0;
};

struct LadderRow {
    double R = 0.0;
    double r = 0.0;
    int count = 0;
    Vec center;  // first center attaining the maximum
};

struct DimensionEstimate {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::string method;  // similarity | box | assouad-two-scale | formula-2
    std::vector<LadderRow> rows;
    std::vector<std::pair<double, double>> slopes;  // (R or 0, slope)
    double residual_rms = 0.0;
    // Formula pipeline: integer part dim V plus the projected estimate.
    int dim_v = -1;
    double projected = 0.0;
    bool strict_inequality_ok = true;
    std::vector<std::string> trace;
};

double similarity_dimension(const std::vector<double>& ratios);

// R ∈ {1/2, 1/4, 1/8}·diam and r = R/2^k for 2 ≤ k ≤ 12 with r ≥ 4·resolution.
std::vector<ScalePair> default_ladder(const PointCloud& cloud);
DimensionEstimate assouad_two_scale(const PointCloud& cloud, const std::vector<ScalePair>& ladder);

// diam/2^k for 2 ≤ k ≤ 12 with scale ≥ 4·resolution; the coarsest grid is dropped.
std::vector<double> default_box_scales(const PointCloud& cloud);
DimensionEstimate box_dimension(const PointCloud& cloud, const std::vector<double>& scales);

struct FormulaOptions {
    WspOptions wsp;
    DirectionOptions directions;
    double rank_tol = 1e-6;
    int closure_budget = 32;
    int max_depth = 3;
    std::optional<std::vector<ScalePair>> ladder;
};

// The system induced on V⊥ (coordinates given by the orthonormal columns of `perp`),
// with identical maps merged. Requires V⊥ to be invariant under every orthogonal part.
IfsSystem project_ifs(const IfsSystem& ifs, const Mat& perp);

DimensionEstimate formula_pipeline(const IfsSystem& ifs, const WspVerdict& verdict, const Subspace& v,
                                   const PointCloud& cloud, const FormulaOptions& opts = {});

void write_estimate_csv(std::ostream& os, const DimensionEstimate& e);
void write_estimate_report(std::ostream& os, const DimensionEstimate& e);

}  // namespace olab
