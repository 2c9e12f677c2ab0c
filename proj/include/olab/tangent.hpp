#pragma once

#include "olab/geometry.hpp"
#include "olab/sampler.hpp"
#include "olab/scale.hpp"
#include "olab/wsp.hpp"

#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace olab {

struct CombParams {
    int n = 14;
    int s = 1;
    double rho = 1.0;
    double eps = 0.0;        // 1/n^(s+2)
    double eta = 0.0;        // eps^2
    double eps2 = 0.0;       // eps^2/4
    double rho_prime = 0.0;  // rho·eta/5
    std::optional<double> theta;

    static CombParams make(int n, int s, double rho, std::optional<double> theta = std::nullopt);
    void validate() const;
};

// One defect pair Φ_k = S_α⁻¹∘S_β − I of a family, with ratios kept exact.
struct FamilyMember {
    std::string alpha;  // printable, possibly compressed
    std::string beta;
    Scale delta;        // ‖Φ_k(a)‖
    Scale ratio_alpha;
    Scale ratio_beta;
    Vec unit;           // Φ_k(a)/‖Φ_k(a)‖
    Mat o_alpha;
    Mat o_beta;
    bool constant = true;  // DΦ_k = 0
};

// A sequence of defects with δ_k strictly decreasing, all taken at the base point a,
// the fixed point of S_γ.
class DefectFamily {
public:
    virtual ~DefectFamily() = default;
    virtual std::string name() const = 0;
    virtual const ScaleBase& base() const = 0;
    // nullopt for unbounded families.
    virtual std::optional<std::size_t> size() const = 0;
    virtual FamilyMember member(std::size_t k) const = 0;
    virtual Word gamma() const = 0;
    virtual double rho() const { return 1.0; }
    // Whether every member is a genuine word pair of the system.
    virtual bool realizable() const { return true; }
};

// Finite family built from computed certificates.
class ListFamily : public DefectFamily {
public:
    ListFamily(const IfsSystem& ifs, std::vector<DefectCertificate> certs, Word gamma, double c0);
    std::string name() const override { return "list"; }
    const ScaleBase& base() const override { return base_; }
    std::optional<std::size_t> size() const override { return members_.size(); }
    FamilyMember member(std::size_t k) const override { return members_.at(k); }
    Word gamma() const override { return gamma_; }
    double rho() const override { return rho_; }

private:
    ScaleBase base_;
    Word gamma_;
    std::vector<FamilyMember> members_;
    double rho_ = 1.0;
};

// Lacunary pairs for a homogeneous identity-rotation system whose translations satisfy
//   b[lead_beta] − b[lead_alpha] = Σ_{k≥k0} c0^(2^k) · b[digit],   b[zero] = 0.
// Member K (K ≥ k0) has length 2^K + 1: β = lead_beta then zeros, α = lead_alpha with the
// digit at positions 2^k + 1 (k0 ≤ k ≤ K) and zeros elsewhere. Φ_K is the constant
//   c0^(2^K − 1) · b[digit] · (1 + Σ_{k>K+1} c0^(2^k − 2^(K+1))).
class LacunaryFamily : public DefectFamily {
public:
    LacunaryFamily(const IfsSystem& ifs, Letter lead_beta, Letter lead_alpha, Letter digit, Letter zero, int k0,
                   std::string name);
    std::string name() const override { return name_; }
    const ScaleBase& base() const override { return base_; }
    std::optional<std::size_t> size() const override { return std::nullopt; }
    FamilyMember member(std::size_t k) const override;
    Word gamma() const override { return Word({zero_}); }

    // Explicit words for member k; only sensible while 2^K stays small.
    std::pair<Word, Word> words(std::size_t k) const;

private:
    ScaleBase base_;
    int d_;
    Letter lead_beta_, lead_alpha_, digit_, zero_;
    int k0_;
    Vec digit_vec_;
    std::string name_;
};

// The same pairs with α and β exchanged; for equal ratios and rotations Φ flips sign.
class SwappedFamily : public DefectFamily {
public:
    explicit SwappedFamily(std::shared_ptr<const DefectFamily> inner) : inner_(std::move(inner)) {}
    std::string name() const override { return "swap(" + inner_->name() + ")"; }
    const ScaleBase& base() const override { return inner_->base(); }
    std::optional<std::size_t> size() const override { return inner_->size(); }
    FamilyMember member(std::size_t k) const override;
    Word gamma() const override { return inner_->gamma(); }
    double rho() const override { return inner_->rho(); }
    bool realizable() const override { return inner_->realizable(); }

private:
    std::shared_ptr<const DefectFamily> inner_;
};

// Abstract constant translations c0^(k+1)·unit with unit-length words; not tied to word pairs
// of the system. Used to exercise multi-direction schedules cheaply.
class SyntheticTranslationFamily : public DefectFamily {
public:
    SyntheticTranslationFamily(const Vec& unit, double c0, Word gamma);
    std::string name() const override { return "synthetic"; }
    const ScaleBase& base() const override { return base_; }
    std::optional<std::size_t> size() const override { return std::nullopt; }
    FamilyMember member(std::size_t k) const override;
    Word gamma() const override { return gamma_; }
    bool realizable() const override { return false; }

private:
    ScaleBase base_;
    Vec unit_;
    Word gamma_;
};

struct CombDirection {
    Vec omega;
    std::shared_ptr<const DefectFamily> forward;   // defects along +omega
    std::shared_ptr<const DefectFamily> backward;  // along −omega; needed for every direction but the last
};

enum class StepPhase : std::uint8_t { Tooth, Return, Shift };
const char* phase_name(StepPhase p);

struct CombStep {
    std::size_t j = 0;
    StepPhase phase = StepPhase::Tooth;
    int direction = 0;  // index into the direction list
    int sign = 1;
    std::size_t leg = 0;
    std::size_t k = 0;  // family member
    mpz_class m;
    std::size_t nu = 0;  // index into the group net
    Vec step;
    double step_norm = 0.0;
    double cone_angle = 0.0;
};

struct CombLeg {
    StepPhase phase = StepPhase::Tooth;
    int direction = 0;
    int sign = 1;
    std::size_t first = 0;  // first step index j in the leg
    std::size_t last = 0;   // last j (breakpoint p_l); last < first for an empty leg
    Vec start;
};

struct TangentAudit {
    CombParams params;
    Vec x0;
    std::vector<CombDirection> directions;
    std::vector<CombStep> steps;      // j = 1..N
    std::vector<CombLeg> legs;
    std::vector<std::size_t> breakpoints;  // p_l, ascending
    std::vector<Vec> path;            // g_j∘h_j(x0), j = 0..N
    std::vector<std::uint8_t> in_wn;  // path membership in W_n(x0)
    std::vector<Word> net_words;      // the finite net 𝒥
    double c_star = 1.0;
    mpz_class M;
    bool realizable = true;
    double max_cone_angle = 0.0;
    double min_step_ratio = 0.0;  // min step_norm / (c*·c_γ·eps)
    double max_step_ratio = 0.0;  // max step_norm / (3·eps)
    double hd_to_target = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> notes;

    // Jacobians of Ψ_j(x) − Ψ_j(x0) in x − x0 for steps whose defect is not constant.
    std::vector<std::pair<std::size_t, Mat>> variation;

    std::vector<Vec> wn_points() const;
};

TangentAudit build_comb(const IfsSystem& ifs, const std::vector<CombDirection>& directions, const Vec& x0,
                        const CombParams& params);

struct Parallelotope {
    Vec origin;
    std::vector<Vec> edges;

    double distance(const Vec& p) const;
    std::vector<Vec> sample(double spacing) const;
};

double verify_tangent_distance(const TangentAudit& audit, const Parallelotope& w, const Vec& x0);
double verify_tangent_distance(const TangentAudit& audit);

struct CombFamily {
    std::vector<Vec> xs;
    std::vector<std::vector<Vec>> sets;  // W_n(x) per sample point
    std::vector<double> max_deviation;   // max_j ‖(g_j∘h_j(x) − x) − (g_j∘h_j(x0) − x0)‖
};

CombFamily build_comb_family(const IfsSystem& ifs, const TangentAudit& audit, const PointCloud& sample,
                             double theta);

void write_audit_csv(std::ostream& os, const TangentAudit& a);
void write_audit_report(std::ostream& os, const TangentAudit& a);

}  // namespace olab
