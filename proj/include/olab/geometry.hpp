#pragma once

#include "olab/errors.hpp"
#include "olab/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace olab {

class OrthogonalMatrix {
public:
    OrthogonalMatrix() = default;
    // Accepts any near-orthogonal matrix and snaps it to its polar factor.
    explicit OrthogonalMatrix(const Mat& m);

    static OrthogonalMatrix identity(int d);
    static OrthogonalMatrix rotation2d(double angle);
    static OrthogonalMatrix axis_angle(const Vec& axis, double angle);

    const Mat& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    bool proper() const { return proper_; }
    bool is_identity(double tol = 0.0) const;

private:
    Mat m_;
    bool proper_ = true;
};

struct Similarity {
    double ratio = 1.0;
    Mat orth;
    Vec trans;

    Similarity() = default;
    Similarity(double c, const OrthogonalMatrix& o, const Vec& b);
    Similarity(double c, const Mat& o, const Vec& b) : ratio(c), orth(o), trans(b) {}

    static Similarity identity(int d);

    int dim() const { return static_cast<int>(trans.size()); }
    Vec apply(const Vec& x) const { return ratio * (orth * x) + trans; }
    Vec fixed_point() const;
};

// a ∘ b
Similarity compose(const Similarity& a, const Similarity& b);
Similarity invert(const Similarity& s);

using Letter = std::uint16_t;

// Letters are stored 0-based; printed 1-based.
struct Word {
    std::vector<Letter> letters;

    Word() = default;
    explicit Word(std::vector<Letter> l) : letters(std::move(l)) {}
    static Word from_one_based(const std::vector<int>& l);

    std::size_t size() const { return letters.size(); }
    bool empty() const { return letters.empty(); }
    Letter operator[](std::size_t i) const { return letters[i]; }
    Word concat(const Word& other) const;
    std::string str() const;

    auto operator<=>(const Word&) const = default;
    bool operator==(const Word&) const = default;
};

class IfsSystem {
public:
    IfsSystem() = default;
    IfsSystem(std::vector<Similarity> maps, std::vector<std::string> labels = {});

    int dim() const { return dim_; }
    std::size_t size() const { return maps_.size(); }
    const Similarity& map(std::size_t i) const { return maps_[i]; }
    const std::vector<Similarity>& maps() const { return maps_; }
    const std::vector<std::string>& labels() const { return labels_; }
    double c_min() const { return c_min_; }
    double c_max() const { return c_max_; }

    // Common ratio when every map has the same ratio.
    std::optional<double> common_ratio() const;
    bool homogeneous_identity() const;

    void check_word(const Word& w) const;

private:
    std::vector<Similarity> maps_;
    std::vector<std::string> labels_;
    int dim_ = 0;
    double c_min_ = 0.0;
    double c_max_ = 0.0;
};

struct AffineMap {
    Mat linear;
    Vec offset;

    Vec apply(const Vec& x) const { return linear * x + offset; }
    bool is_constant() const { return linear.isZero(0.0); }
};

struct Box {
    Vec lo;
    Vec hi;

    int dim() const { return static_cast<int>(lo.size()); }
    Vec center() const { return 0.5 * (lo + hi); }
    double diameter() const { return (hi - lo).norm(); }
    bool contains(const Vec& x, double slack = 0.0) const;
    std::vector<Vec> vertices() const;
};

Similarity compose(const IfsSystem& ifs, const Word& w);

// Cube circumscribing the bound ‖x‖ ≤ max‖b_i‖/(1 − c_max) on the attractor.
Box fixed_point_cube(const IfsSystem& ifs);
// Tight axis-aligned box containing the attractor, refined from fixed_point_cube.
Box attractor_box(const IfsSystem& ifs);

struct DefectResult {
    AffineMap phi;
    double sup_norm = 0.0;
    double op_norm = 0.0;
};

double sup_norm_on_box(const AffineMap& phi, const Box& box);

// Φ = S_α⁻¹∘S_β − I. The common prefix of α and β is cancelled first.
DefectResult defect(const IfsSystem& ifs, const Word& alpha, const Word& beta, const Box& cube);
DefectResult defect_of_maps(const Similarity& sa, const Similarity& sb, const Box& cube);

struct BallMinimum {
    Vec argmin;
    double value = 0.0;
};

BallMinimum min_norm_on_ball(const AffineMap& phi, const Vec& center, double radius);

}  // namespace olab
