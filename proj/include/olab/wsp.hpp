#pragma once

#include "olab/geometry.hpp"
#include "olab/grid.hpp"
#include "olab/sampler.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace olab {

struct DefectCertificate {
    Word alpha;
    Word beta;
    AffineMap phi;
    double sup_norm = 0.0;
    double op_norm = 0.0;
    double ratio_alpha = 0.0;
    double ratio_beta = 0.0;
    std::optional<Vec> direction;
    Vec base_point;
    double rho = 0.0;
    Vec a_min;  // minimizer of ‖Φ‖ on B(base_point, rho)
    double min_value = 0.0;
    bool technical_ok = false;
    // ‖S_β(0) − S_α(0)‖ before normalisation; only filled by the homogeneous search.
    std::optional<double> raw_gap;

    int length() const { return static_cast<int>(std::max(alpha.size(), beta.size())); }
};

enum class WspStatus { FailsWitnessed, HoldsLikely, Inconclusive };
const char* status_name(WspStatus s);

struct LengthFloor {
    int length = 0;
    double floor = 0.0;  // +inf when no resolved positive defect exists at this length
    std::size_t pairs = 0;
    std::size_t exact_overlaps = 0;
    std::size_t unresolved = 0;
};

struct WspOptions {
    int max_len = 8;
    std::size_t budget = 10'000'000;
    std::size_t evidence_per_length = 16;
    double witness_threshold = 1e-4;
    double holds_threshold = 1e-2;
    std::optional<Box> cube;  // defaults to fixed_point_cube
};

struct WspVerdict {
    WspStatus status = WspStatus::Inconclusive;
    std::string method;
    std::vector<DefectCertificate> evidence;  // sorted by (sup_norm, alpha, beta)
    std::vector<LengthFloor> floors;          // complete lengths only, ascending
    std::vector<std::pair<Word, Word>> exact_overlap_examples;
    std::size_t exact_overlaps = 0;
    std::size_t unresolved = 0;
    std::size_t pairs_evaluated = 0;
    bool budget_exhausted = false;
    std::vector<int> witness_chain;  // lengths of the strictly decreasing floor records
    std::vector<std::string> notes;
    Box cube;
};

// Pair-search plumbing shared by the flat and graph-directed searches.
struct WordLevel {
    int length = 0;
    std::vector<Letter> letters;  // row-major, `length` letters per item
    std::vector<Vec> images;      // S_w(probe)
    std::vector<double> ratios;

    std::size_t size() const { return ratios.size(); }
    Word word(std::size_t i) const;
};

struct PairSearchSpec {
    std::vector<Similarity> alphabet;
    Box cube;
    Vec probe;
    std::vector<WordLevel> levels;  // levels[L-1] holds the items of length L (may be empty)
    bool equal_length_only = false;
    bool translation_closed_form = false;
    // Build missing levels by prefixing letters (flat IFS); graph searches pre-build theirs.
    bool auto_extend = false;
};

WspVerdict run_pair_search(PairSearchSpec spec, const WspOptions& opts);

// Extends every word of `prev` by each letter in front: S_{i w} = S_i ∘ S_w.
WordLevel extend_level(const WordLevel& prev, const std::vector<Similarity>& alphabet);
WordLevel first_level(const std::vector<Similarity>& alphabet, const Vec& probe);

WspVerdict search_defects(const IfsSystem& ifs, const WspOptions& opts);
WspVerdict homogeneous_search(const IfsSystem& ifs, const WspOptions& opts);
// homogeneous_search when applicable, otherwise search_defects.
WspVerdict analyze_wsp(const IfsSystem& ifs, const WspOptions& opts);

// Re-derives status and witness chain from floors; used after merging or truncating.
void grade_verdict(WspVerdict& v, const WspOptions& opts);

DefectCertificate make_certificate(const IfsSystem& ifs, const Word& alpha, const Word& beta, const Box& cube);
DefectCertificate swap_certificate(const IfsSystem& ifs, const DefectCertificate& c, const Box& cube);

struct ExtractOptions {
    int rho_steps = 12;
    double angle_tol = 1e-3;
    std::size_t max_base_points = 64;
};

struct ExtractionResult {
    DefectCertificate certificate;  // completed: last retained certificate
    std::vector<std::size_t> retained;
    std::vector<Vec> iterates;
    bool converged = false;
    std::string diagnostics;
};

ExtractionResult extract_direction(const std::vector<DefectCertificate>& certs, const PointCloud& cloud,
                                   const ExtractOptions& opts = {});

struct DirectionFinding {
    Vec direction;
    std::vector<DefectCertificate> chain;  // sign-aligned, strictly decreasing
    ExtractionResult extraction;
};

struct DirectionOptions {
    double cluster_angle = 0.1;
    ExtractOptions extract;
};

// Groups evidence by direction (up to sign) and extracts one direction per group whose
// strictly decreasing chain spans ≥ 3 lengths and ends below the witness threshold.
std::vector<DirectionFinding> find_directions(const IfsSystem& ifs, const WspVerdict& verdict,
                                              const PointCloud& cloud, const WspOptions& wsp,
                                              const DirectionOptions& opts = {});

void write_evidence_csv(std::ostream& os, const std::vector<DefectCertificate>& certs);
void write_floors_csv(std::ostream& os, const WspVerdict& v);
void write_verdict_report(std::ostream& os, const WspVerdict& v);
void write_certificate_block(std::ostream& os, const DefectCertificate& c);

}  // namespace olab
