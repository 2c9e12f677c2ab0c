#include "olab/tangent.hpp"

#include "olab/kernels.hpp"
#include "olab/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

namespace olab {

CombParams CombParams::make(int n, int s, double rho, std::optional<double> theta) {
    CombParams p;
    p.n = n;
    p.s = s;
    p.rho = rho;
    p.eps = std::pow(static_cast<double>(n), -(s + 2));
    p.eta = p.eps * p.eps;
    p.eps2 = p.eta / 4.0;
    p.rho_prime = rho * p.eta / 5.0;
    p.theta = theta;
    return p;
}

void CombParams::validate() const {
    if (n < 14) fail(ErrorCode::Precondition, "comb needs n >= 14 (got n = " + std::to_string(n) + ")");
    if (s < 1) fail(ErrorCode::Precondition, "comb needs s >= 1 directions");
    if (!(rho > 0.0)) fail(ErrorCode::Precondition, "comb needs rho > 0");
    const CombParams q = make(n, s, rho, theta);
    if (q.eps != eps || q.eta != eta || q.eps2 != eps2 || q.rho_prime != rho_prime)
        fail(ErrorCode::Precondition, "comb parameters are inconsistent with n, s and rho");
    if (theta && !(*theta > 0.0 && *theta < rho_prime))
        fail(ErrorCode::Precondition, "theta must lie in (0, rho')");
}

const char* phase_name(StepPhase p) {
    switch (p) {
        case StepPhase::Tooth: return "tooth";
        case StepPhase::Return: return "return";
        case StepPhase::Shift: return "shift";
    }
    return "?";
}

// ---- families ----

ListFamily::ListFamily(const IfsSystem& ifs, std::vector<DefectCertificate> certs, Word gamma, double c0)
    : base_(c0), gamma_(std::move(gamma)) {
    ifs.check_word(gamma_);
    if (gamma_.empty()) fail(ErrorCode::Precondition, "gamma must be a non-empty word");
    const Vec a = compose(ifs, gamma_).fixed_point();
    auto ratio = [&](double c, const Word& w) {
        const long g = base_.exponent_of(c);
        if (g < 0 && !w.empty())
            fail(ErrorCode::Precondition, "ratio of " + w.str() + " is not a power of the base ratio");
        return w.empty() ? base_.one() : base_.power(mpz_class(g));
    };
    std::vector<std::pair<double, FamilyMember>> tmp;
    for (const auto& c : certs) {
        const Vec v = c.phi.apply(a);
        const double dn = v.norm();
        if (!(dn > 0.0)) continue;
        FamilyMember m;
        m.alpha = c.alpha.str();
        m.beta = c.beta.str();
        m.delta = base_.from_double(dn);
        m.ratio_alpha = ratio(c.ratio_alpha, c.alpha);
        m.ratio_beta = ratio(c.ratio_beta, c.beta);
        m.unit = v / dn;
        m.o_alpha = compose(ifs, c.alpha).orth;
        m.o_beta = compose(ifs, c.beta).orth;
        m.constant = c.phi.is_constant();
        if (!m.constant) rho_ = std::min(rho_, 3.0 * dn / operator_norm(c.phi.linear));
        tmp.emplace_back(dn, std::move(m));
    }
    std::stable_sort(tmp.begin(), tmp.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    double last = std::numeric_limits<double>::infinity();
    for (auto& [dn, m] : tmp)
        if (dn < last) {
            members_.push_back(std::move(m));
            last = dn;
        }
}

LacunaryFamily::LacunaryFamily(const IfsSystem& ifs, Letter lead_beta, Letter lead_alpha, Letter digit, Letter zero,
                               int k0, std::string name)
    : base_(ifs.common_ratio().value_or(0.5)),
      d_(ifs.dim()),
      lead_beta_(lead_beta),
      lead_alpha_(lead_alpha),
      digit_(digit),
      zero_(zero),
      k0_(k0),
      name_(std::move(name)) {
    if (!ifs.homogeneous_identity())
        fail(ErrorCode::Precondition, "lacunary families need a homogeneous system with identity rotations");
    ifs.check_word(Word({lead_beta, lead_alpha, digit, zero}));
    if (k0 < 0 || k0 > 8) fail(ErrorCode::Domain, "lacunary k0 must lie in [0, 8]");
    if (!ifs.map(zero).trans.isZero(0.0)) fail(ErrorCode::Precondition, "the zero letter must fix the origin");
    digit_vec_ = ifs.map(digit).trans;
    if (digit_vec_.isZero(0.0)) fail(ErrorCode::Precondition, "the digit letter must have a non-zero translation");
    const double c0 = base_.c0();
    const Vec lhs = ifs.map(lead_beta).trans - ifs.map(lead_alpha).trans;
    Vec rhs = Vec::Zero(d_);
    for (int k = k0; k < 12; ++k) rhs += std::pow(c0, std::ldexp(1.0, k)) * digit_vec_;
    if ((lhs - rhs).norm() > 1e-12 * (1.0 + lhs.norm()))
        fail(ErrorCode::Precondition, "translations do not satisfy the lacunary series identity for " + name_);
    // Closed form against direct evaluation on the short members.
    const Box cube = fixed_point_cube(ifs);
    for (std::size_t k = 0; k < 3; ++k) {
        if ((1u << (k0 + k)) > 64) break;
        const auto [al, be] = words(k);
        const DefectResult dr = defect(ifs, al, be, cube);
        const FamilyMember m = member(k);
        const Vec closed = base_.to_double(m.delta) * m.unit;
        if ((dr.phi.offset - closed).norm() > 1e-8 || !dr.phi.is_constant())
            fail(ErrorCode::Numeric, "lacunary closed form disagrees with the direct defect for " + name_);
    }
}

std::pair<Word, Word> LacunaryFamily::words(std::size_t k) const {
    const int K = k0_ + static_cast<int>(k);
    if (K > 20) fail(ErrorCode::Domain, "lacunary member too long to expand");
    const std::size_t len = (std::size_t{1} << K) + 1;
    std::vector<Letter> a(len, zero_), b(len, zero_);
    a[0] = lead_alpha_;
    b[0] = lead_beta_;
    for (int q = k0_; q <= K; ++q) a[(std::size_t{1} << q)] = digit_;
    return {Word(std::move(a)), Word(std::move(b))};
}

FamilyMember LacunaryFamily::member(std::size_t k) const {
    const int K = k0_ + static_cast<int>(k);
    const double c0 = base_.c0();
    mpz_class two_k;
    mpz_ui_pow_ui(two_k.get_mpz_t(), 2, static_cast<unsigned long>(K));
    // Tail correction 1 + Σ_{q>K+1} c0^(2^q − 2^(K+1)); vanishes in double quickly.
    double corr = 0.0;
    for (int q = K + 2; q < K + 8 && q < 60; ++q) {
        const double ex = std::ldexp(1.0, q) - std::ldexp(1.0, K + 1);
        const double t = std::pow(c0, ex);
        if (t == 0.0) break;
        corr += t;
    }
    FamilyMember m;
    m.delta = base_.mul(base_.power(mpz_class(two_k - 1)), base_.from_double(digit_vec_.norm() * (1.0 + corr)));
    m.ratio_alpha = m.ratio_beta = base_.power(mpz_class(two_k + 1));
    m.unit = digit_vec_ / digit_vec_.norm();
    m.o_alpha = m.o_beta = Mat::Identity(d_, d_);
    m.constant = true;
    const std::string len = "2^" + std::to_string(K) + "+1";
    m.beta = std::to_string(lead_beta_ + 1) + "." + std::to_string(zero_ + 1) + "^(2^" + std::to_string(K) + ")";
    m.alpha = std::to_string(lead_alpha_ + 1) + ".[" + std::to_string(digit_ + 1) + " at 2^k+1 for k=" +
              std::to_string(k0_) + ".." + std::to_string(K) + ", else " + std::to_string(zero_ + 1) +
              "], length " + len;
    return m;
}

FamilyMember SwappedFamily::member(std::size_t k) const {
    FamilyMember m = inner_->member(k);
    if (!m.constant) fail(ErrorCode::Precondition, "swapped families need constant defects");
    std::swap(m.alpha, m.beta);
    std::swap(m.ratio_alpha, m.ratio_beta);
    std::swap(m.o_alpha, m.o_beta);
    m.unit = -m.unit;
    return m;
}

SyntheticTranslationFamily::SyntheticTranslationFamily(const Vec& unit, double c0, Word gamma)
    : base_(c0), unit_(unit.normalized()), gamma_(std::move(gamma)) {}

FamilyMember SyntheticTranslationFamily::member(std::size_t k) const {
    FamilyMember m;
    m.delta = base_.power(mpz_class(static_cast<unsigned long>(k + 1)));
    m.ratio_alpha = m.ratio_beta = base_.power(mpz_class(1));
    m.unit = unit_;
    m.o_alpha = m.o_beta = Mat::Identity(unit_.size(), unit_.size());
    m.alpha = "syn" + std::to_string(k) + "a";
    m.beta = "syn" + std::to_string(k) + "b";
    return m;
}

// ---- builder ----

namespace {

constexpr std::size_t kMaxSteps = 20'000'000;

double angle_to(const Vec& v, const Vec& omega) {
    const double along = v.dot(omega);
    return std::atan2((v - along * omega).norm(), along);
}

struct FamilyState {
    const DefectFamily* fam = nullptr;
    Similarity gamma_map;
    long g = 0;  // c_γ = c0^g
    double c_gamma = 0.0;
    std::size_t order = 1;  // order of O_γ in the group
    std::size_t cursor = 0;
    std::optional<FamilyMember> cached;
};

class CombBuilder {
public:
    CombBuilder(const IfsSystem& ifs, const std::vector<CombDirection>& dirs, const Vec& x0, const CombParams& p)
        : ifs_(ifs), base_(dirs.front().forward->base()), p_(p) {
        a_.params = p;
        a_.x0 = x0;
        a_.directions = dirs;
        d_ = base_.one();
        rho_gh_ = base_.one();
        const int dim = ifs.dim();
        A_ = Mat::Identity(dim, dim);
        Oh_ = Mat::Identity(dim, dim);
        build_net();
        for (auto& dir : a_.directions) dir.omega.normalize();
        for (const auto& dir : a_.directions)
            for (const auto* f : {dir.forward.get(), dir.backward.get()})
                if (f && !states_.count(f)) add_family(f);
        compute_M();
        eps_ = base_.from_double(p_.eps);
        point_ = x0;
        a_.path.push_back(x0);
        a_.in_wn.push_back(0);
    }

    TangentAudit run() {
        slab(p_.s - 1);
        finish_checks();
        return std::move(a_);
    }

private:
    void build_net() {
        const int dim = ifs_.dim();
        net_.push_back(Mat::Identity(dim, dim));
        a_.net_words.push_back(Word());
        net_ratio_.push_back(base_.one());
        bool trivial = true;
        for (const auto& m : ifs_.maps())
            if (!(m.orth - Mat::Identity(dim, dim)).isZero(1e-12)) trivial = false;
        if (!trivial) {
            const GroupEnumeration g = enumerate_group(ifs_);
            if (!g.finite)
                fail(ErrorCode::NetTooCoarse,
                     "the rotation group is infinite or larger than the enumeration cap; no finite net exists "
                     "for this construction");
            for (std::size_t i = 0; i < g.elements.size(); ++i) {
                if ((g.elements[i] - net_.front()).cwiseAbs().maxCoeff() <= 1e-9) continue;
                net_.push_back(g.elements[i]);
                a_.net_words.push_back(g.words[i]);
                const double c = compose(ifs_, g.words[i]).ratio;
                const long e = base_.exponent_of(c);
                if (e < 0) fail(ErrorCode::Precondition, "net word ratio is not a power of the base ratio");
                net_ratio_.push_back(base_.power(mpz_class(e)));
            }
        }
        double cs = 1.0;
        for (const auto& w : a_.net_words)
            if (!w.empty()) cs = std::min(cs, compose(ifs_, w).ratio);
        a_.c_star = cs;
        c_star_ = base_.from_double(cs);
    }

    std::size_t net_index(const Mat& m) const {
        for (std::size_t i = 0; i < net_.size(); ++i)
            if ((net_[i] - m).cwiseAbs().maxCoeff() <= 1e-9) return i;
        fail(ErrorCode::NetTooCoarse, "group element outside the enumerated net");
    }

    void add_family(const DefectFamily* f) {
        if (std::abs(f->base().c0() - base_.c0()) > 1e-15)
            fail(ErrorCode::Precondition, "all defect families must share one base ratio");
        FamilyState st;
        st.fam = f;
        const Word gw = f->gamma();
        ifs_.check_word(gw);
        st.gamma_map = compose(ifs_, gw);
        st.c_gamma = st.gamma_map.ratio;
        st.g = base_.exponent_of(st.c_gamma);
        if (st.g < 1) fail(ErrorCode::Precondition, "c_gamma is not a power of the base ratio");
        Mat pw = st.gamma_map.orth;
        const Mat id = Mat::Identity(ifs_.dim(), ifs_.dim());
        while ((pw - id).cwiseAbs().maxCoeff() > 1e-9) {
            pw = pw * st.gamma_map.orth;
            if (++st.order > net_.size() + 1) fail(ErrorCode::NetTooCoarse, "O_gamma has infinite order");
        }
        a_.realizable = a_.realizable && f->realizable();
        const std::string note = "family " + f->name() + " is synthetic; word realizability is not applicable";
        if (!f->realizable() && std::find(a_.notes.begin(), a_.notes.end(), note) == a_.notes.end())
            a_.notes.push_back(note);
        states_[f] = std::move(st);
    }

    void compute_M() {
        // Smallest m with c_γ^m · max_{x∈F}‖x − a‖ ≤ ρ' (or θ).
        const Box box = attractor_box(ifs_);
        const double radius = p_.theta ? *p_.theta : p_.rho_prime;
        long M = 0;
        for (auto& [f, st] : states_) {
            const Vec a = st.gamma_map.fixed_point();
            double far = 0.0;
            for (const auto& v : box.vertices()) far = std::max(far, (v - a).norm());
            long m = 0;
            if (far > radius) {
                m = static_cast<long>(std::ceil(std::log(radius / far) / std::log(st.c_gamma)));
                while (m > 0 && std::pow(st.c_gamma, m - 1) * far <= radius) --m;
                while (std::pow(st.c_gamma, m) * far > radius) ++m;
            }
            M = std::max(M, m);
        }
        a_.M = M;
    }

    const FamilyMember& current(FamilyState& st) {
        if (!st.cached) st.cached = st.fam->member(st.cursor);
        return *st.cached;
    }

    Mat gamma_pow(const FamilyState& st, const mpz_class& m, bool inverse) const {
        mpz_class r = m % static_cast<unsigned long>(st.order);
        Mat o = Mat::Identity(ifs_.dim(), ifs_.dim());
        const Mat g = inverse ? Mat(st.gamma_map.orth.transpose()) : st.gamma_map.orth;
        for (unsigned long i = 0; i < r.get_ui(); ++i) o = o * g;
        return o;
    }

    // Largest m with X·c_γ^(−m) < ε, where X = d·c*^(−1)·δ.
    mpz_class fit_m(const Scale& X, long g) const {
        const Scale q = base_.div(eps_, X);
        mpz_class Q, R;
        mpz_fdiv_qr_ui(Q.get_mpz_t(), R.get_mpz_t(), q.e.get_mpz_t(), static_cast<unsigned long>(g));
        const bool up = R > 0 || q.l > 0.0;
        return Q + (up ? 1 : 0) - 1;
    }

    // Attempts one step; commits it when the new point stays in the leg's cone and ball.
    bool step(int dir, int sign, const Vec& center, double radius, StepPhase phase, std::size_t leg) {
        const CombDirection& cd = a_.directions[dir];
        const DefectFamily* fam = sign > 0 ? cd.forward.get() : cd.backward.get();
        FamilyState& st = states_.at(fam);
        const Vec omega = sign * cd.omega;
        const mpz_class M = a_.M;
        // δ must satisfy d·c*^(−1)·δ·c_γ^(−M) < ε.
        const Scale need = base_.div(base_.mul(base_.mul(eps_, c_star_), base_.power(mpz_class(M * st.g))), d_);
        mpz_class m;
        while (true) {
            if (fam->size() && st.cursor >= *fam->size())
                fail(ErrorCode::InsufficientDefectDepth,
                     "family " + fam->name() + " has no defect below the required scale delta < " + base_.str(need) +
                         " (step " + std::to_string(a_.steps.size() + 1) + ", " + phase_name(phase) +
                         " leg); supply deeper certificates");
            const FamilyMember& mem = current(st);
            if (base_.cmp(mem.delta, need) < 0) {
                const Scale X = base_.div(base_.mul(d_, mem.delta), c_star_);
                m = fit_m(X, st.g);
                if (m >= M) break;
            }
            ++st.cursor;
            st.cached.reset();
        }
        const FamilyMember& mem = current(st);
        const Mat og_inv_m = gamma_pow(st, m, true);
        // ν with ‖A·O_ν⁻¹·O_γ^(−m) − I‖ < ε₂, first in shortlex order.
        std::size_t nu = net_.size();
        for (std::size_t i = 0; i < net_.size(); ++i)
            if (operator_norm(A_ * net_[i].transpose() * og_inv_m - Mat::Identity(A_.rows(), A_.cols())) <
                p_.eps2) {
                nu = i;
                break;
            }
        if (nu == net_.size())
            fail(ErrorCode::NetTooCoarse, "no net element within eps2 of the required rotation");
        const Scale scale = base_.mul(base_.div(d_, net_ratio_[nu]), base_.power(mpz_class(-m * st.g)));
        const double factor = base_.to_double(base_.mul(scale, mem.delta));
        const Mat rot = A_ * net_[nu].transpose() * og_inv_m;
        const Vec sv = factor * (rot * mem.unit);
        const Vec cand = point_ + sv;
        const double max_angle = std::asin(std::min(1.0, p_.eta));
        if ((cand - center).norm() > radius) return false;
        if (angle_to(cand - center, omega) > max_angle) return false;

        if (a_.steps.size() >= kMaxSteps)
            fail(ErrorCode::PointBudget, "comb schedule exceeds " + std::to_string(kMaxSteps) + " steps");
        CombStep cs;
        cs.j = a_.steps.size() + 1;
        cs.phase = phase;
        cs.direction = dir;
        cs.sign = sign;
        cs.leg = leg;
        cs.k = st.cursor;
        cs.m = m;
        cs.nu = nu;
        cs.step = sv;
        cs.step_norm = sv.norm();
        cs.cone_angle = angle_to(sv, omega);
        const double lo = a_.c_star * st.c_gamma * p_.eps;
        a_.min_step_ratio = a_.steps.empty() ? cs.step_norm / lo : std::min(a_.min_step_ratio, cs.step_norm / lo);
        a_.max_step_ratio = std::max(a_.max_step_ratio, cs.step_norm / (3.0 * p_.eps));
        a_.max_cone_angle = std::max(a_.max_cone_angle, cs.cone_angle);

        const Mat og_m = gamma_pow(st, m, false);
        if (!mem.constant) {
            const double cb_ca = base_.to_double(base_.div(mem.ratio_beta, mem.ratio_alpha));
            const Mat dphi = cb_ca * mem.o_alpha.transpose() * mem.o_beta - Mat::Identity(A_.rows(), A_.cols());
            const double r = base_.to_double(rho_gh_);
            a_.variation.emplace_back(cs.j, Mat(r * rot * dphi * og_m * net_[nu] * Oh_));
        }
        // g_j = g_{j−1}∘S_ν⁻¹∘f^(−m)∘S_α⁻¹,  h_j = S_β∘f^m∘S_ν∘h_{j−1}.
        d_ = base_.div(scale, mem.ratio_alpha);
        A_ = polar_orthogonal(rot * mem.o_alpha.transpose());
        Oh_ = polar_orthogonal(mem.o_beta * og_m * net_[nu] * Oh_);
        rho_gh_ = base_.mul(rho_gh_, base_.div(mem.ratio_beta, mem.ratio_alpha));
        point_ = cand;
        a_.steps.push_back(std::move(cs));
        a_.path.push_back(point_);
        a_.in_wn.push_back(phase == StepPhase::Tooth ? 1 : 0);
        return true;
    }

    void leg(int dir, int sign, double radius, StepPhase phase) {
        CombLeg lg;
        lg.phase = phase;
        lg.direction = dir;
        lg.sign = sign;
        lg.first = a_.steps.size() + 1;
        lg.start = point_;
        const std::size_t idx = a_.legs.size();
        if (phase == StepPhase::Tooth) a_.in_wn.back() = 1;
        while (step(dir, sign, lg.start, radius, phase, idx)) {
        }
        lg.last = a_.steps.size();
        a_.legs.push_back(lg);
        a_.breakpoints.push_back(lg.last);
    }

    // Slab over directions 0..r: n+1 copies of slab(r−1) joined by returns and shifts along ω^r.
    void slab(int r) {
        if (r == 0) {
            leg(0, 1, 1.0, StepPhase::Tooth);
            return;
        }
        for (int K = 1; K <= p_.n + 1; ++K) {
            slab(r - 1);
            if (K == p_.n + 1) break;
            for (int i = 0; i < r; ++i) leg(i, -1, 1.0, StepPhase::Return);
            leg(r, 1, 1.0 / p_.n, StepPhase::Shift);
        }
    }

    void finish_checks() {
        const double tol = 1e-9;
        for (const auto& st : a_.steps) {
            const FamilyState& fs =
                states_.at(st.sign > 0 ? a_.directions[st.direction].forward.get()
                                       : a_.directions[st.direction].backward.get());
            const double lo = a_.c_star * fs.c_gamma * p_.eps;
            if (st.step_norm < lo * (1 - tol) || st.step_norm > 3.0 * p_.eps * (1 + tol))
                fail(ErrorCode::AuditInconsistency, "step " + std::to_string(st.j) + " violates the step-norm bounds");
            if (st.cone_angle > std::asin(std::min(1.0, p_.eta)) * (1 + tol) + 1e-15)
                fail(ErrorCode::AuditInconsistency, "step " + std::to_string(st.j) + " leaves the cone");
        }
        // Tooth flatness: within 3ε + η of the line through the tooth base.
        const Vec& w0 = a_.directions[0].omega;
        for (const auto& lg : a_.legs) {
            if (lg.phase != StepPhase::Tooth) continue;
            if (lg.last < lg.first)
                fail(ErrorCode::AuditInconsistency, "a tooth leg took no steps");
            for (std::size_t j = lg.first; j <= lg.last; ++j) {
                const Vec v = a_.path[j] - lg.start;
                if ((v - v.dot(w0) * w0).norm() > 3 * p_.eps + p_.eta)
                    fail(ErrorCode::AuditInconsistency, "tooth point " + std::to_string(j) + " is not flat");
            }
        }
        if (p_.s >= 2) {
            Parallelotope w{a_.x0, {}};
            for (const auto& d : a_.directions) w.edges.push_back(d.omega);
            const double bound = std::pow(7.0 * p_.n, p_.s) * p_.eps;
            for (std::size_t j = 0; j < a_.path.size(); ++j)
                if (a_.in_wn[j] && w.distance(a_.path[j]) > bound)
                    fail(ErrorCode::AuditInconsistency, "point " + std::to_string(j) + " leaves the flat slab");
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "M = %s, c* = %.6g, steps = %zu", a_.M.get_str().c_str(), a_.c_star,
                      a_.steps.size());
        a_.notes.push_back(buf);
    }

    const IfsSystem& ifs_;
    ScaleBase base_;
    CombParams p_;
    TangentAudit a_;
    std::map<const DefectFamily*, FamilyState> states_;
    std::vector<Mat> net_;
    std::vector<Scale> net_ratio_;
    Scale c_star_;
    Scale eps_;
    Scale d_;
    Scale rho_gh_;
    Mat A_;
    Mat Oh_;
    Vec point_;
};

}  // namespace

std::vector<Vec> TangentAudit::wn_points() const {
    std::vector<Vec> out;
    for (std::size_t j = 0; j < path.size(); ++j)
        if (in_wn[j]) out.push_back(path[j]);
    return out;
}

TangentAudit build_comb(const IfsSystem& ifs, const std::vector<CombDirection>& directions, const Vec& x0,
                        const CombParams& params) {
    params.validate();
    if (static_cast<int>(directions.size()) != params.s)
        fail(ErrorCode::Precondition, "expected " + std::to_string(params.s) + " directions");
    if (x0.size() != ifs.dim()) fail(ErrorCode::Domain, "x0 dimension mismatch");
    Mat basis(ifs.dim(), params.s);
    for (int i = 0; i < params.s; ++i) {
        const auto& d = directions[i];
        if (d.omega.size() != ifs.dim() || !(d.omega.norm() > 0.0))
            fail(ErrorCode::Domain, "direction " + std::to_string(i + 1) + " is not a non-zero d-vector");
        if (!d.forward) fail(ErrorCode::Precondition, "direction " + std::to_string(i + 1) + " has no family");
        if (i + 1 < params.s && !d.backward)
            fail(ErrorCode::Precondition, "direction " + std::to_string(i + 1) + " needs a backward family");
        if (d.forward->rho() < params.rho * (1 - 1e-12) || (d.backward && d.backward->rho() < params.rho * (1 - 1e-12)))
            fail(ErrorCode::Precondition, "params.rho exceeds the rho certified by a family");
        basis.col(i) = d.omega.normalized();
    }
    Eigen::JacobiSVD<Mat> svd(basis);
    if (svd.singularValues()(params.s - 1) < 1e-9)
        fail(ErrorCode::Precondition, "comb directions are not linearly independent");
    CombBuilder b(ifs, directions, x0, params);
    return b.run();
}

double Parallelotope::distance(const Vec& p) const {
    const int s = static_cast<int>(edges.size());
    const int d = static_cast<int>(origin.size());
    if (s == 0) return (p - origin).norm();
    Mat E(d, s);
    for (int i = 0; i < s; ++i) E.col(i) = edges[i];
    const Vec q = p - origin;
    // Each coordinate is free, clamped at 0, or clamped at 1; the optimum lies in one such face.
    double best = std::numeric_limits<double>::infinity();
    int total = 1;
    for (int i = 0; i < s; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
        int c = code;
        std::vector<int> state(s);
        std::vector<int> free;
        Vec fixed = Vec::Zero(d);
        for (int i = 0; i < s; ++i) {
            state[i] = c % 3;
            c /= 3;
            if (state[i] == 0) free.push_back(i);
            if (state[i] == 2) fixed += edges[i];
        }
        Vec lam = Vec::Zero(s);
        for (int i = 0; i < s; ++i) lam(i) = state[i] == 2 ? 1.0 : 0.0;
        if (!free.empty()) {
            Eigen::MatrixXd F(d, free.size());
            for (std::size_t k = 0; k < free.size(); ++k) F.col(k) = edges[free[k]];
            const Eigen::VectorXd rhs = q - fixed;
            const Eigen::VectorXd x = F.colPivHouseholderQr().solve(rhs);
            bool ok = true;
            for (std::size_t k = 0; k < free.size(); ++k) {
                if (x(k) < 0.0 || x(k) > 1.0) ok = false;
                lam(free[k]) = x(k);
            }
            if (!ok) continue;
        }
        best = std::min(best, (E * lam - q).norm());
    }
    return best;
}

std::vector<Vec> Parallelotope::sample(double spacing) const {
    const int s = static_cast<int>(edges.size());
    std::vector<long> count(s);
    long total = 1;
    for (int i = 0; i < s; ++i) {
        count[i] = std::max(1L, static_cast<long>(std::ceil(edges[i].norm() / spacing)));
        total *= count[i] + 1;
    }
    std::vector<Vec> out;
    out.reserve(total);
    for (long idx = 0; idx < total; ++idx) {
        long c = idx;
        Vec p = origin;
        for (int i = 0; i < s; ++i) {
            const long t = c % (count[i] + 1);
            c /= count[i] + 1;
            p += (static_cast<double>(t) / count[i]) * edges[i];
        }
        out.push_back(p);
    }
    return out;
}

double verify_tangent_distance(const TangentAudit& audit, const Parallelotope& w, const Vec& x0) {
    if (w.edges.empty()) fail(ErrorCode::Precondition, "tangent distance needs s >= 1");
    Parallelotope target = w;
    target.origin = x0 + w.origin;
    const std::vector<Vec> pts = audit.wn_points();
    if (pts.empty()) fail(ErrorCode::Precondition, "audit has no W_n points");
    double to_target = 0.0;
    const long n = static_cast<long>(pts.size());
#pragma omp parallel for reduction(max : to_target) schedule(static)
    for (long i = 0; i < n; ++i) to_target = std::max(to_target, target.distance(pts[i]));
    const auto sample = target.sample(1.0 / (10.0 * audit.params.n));
    const double from_target = kernels::parallel::directed_hausdorff(sample, pts);
    return std::max(to_target, from_target);
}

double verify_tangent_distance(const TangentAudit& audit) {
    Parallelotope w{Vec::Zero(audit.x0.size()), {}};
    for (const auto& d : audit.directions) w.edges.push_back(d.omega);
    return verify_tangent_distance(audit, w, audit.x0);
}

CombFamily build_comb_family(const IfsSystem& ifs, const TangentAudit& audit, const PointCloud& sample,
                             double theta) {
    if (!audit.params.theta || std::abs(*audit.params.theta - theta) > 1e-15 * theta)
        fail(ErrorCode::Precondition, "the audit was not built with the theta-refined M for theta = " +
                                          std::to_string(theta));
    if (sample.dim != ifs.dim()) fail(ErrorCode::Domain, "sample dimension mismatch");
    CombFamily fam;
    fam.xs = sample.points;
    fam.sets.resize(sample.points.size());
    fam.max_deviation.assign(sample.points.size(), 0.0);
    const long nx = static_cast<long>(sample.points.size());
    const Vec& x0 = audit.x0;
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < nx; ++i) {
        const Vec& x = sample.points[i];
        const Vec dx = x - x0;
        Vec dev = Vec::Zero(x.size());
        std::size_t vi = 0;
        double worst = 0.0;
        auto& out = fam.sets[i];
        for (std::size_t j = 0; j < audit.path.size(); ++j) {
            while (vi < audit.variation.size() && audit.variation[vi].first == j) {
                dev += audit.variation[vi].second * dx;
                ++vi;
            }
            worst = std::max(worst, dev.norm());
            if (audit.in_wn[j]) out.push_back(audit.path[j] - x0 + x + dev);
        }
        fam.max_deviation[i] = worst;
    }
    for (std::size_t i = 0; i < fam.max_deviation.size(); ++i)
        if (!(fam.max_deviation[i] < audit.params.eps))
            fail(ErrorCode::AuditInconsistency,
                 "relative-position deviation " + std::to_string(fam.max_deviation[i]) + " reaches eps at sample " +
                     std::to_string(i) + "; theta is too large, try theta/2");
    return fam;
}

void write_audit_csv(std::ostream& os, const TangentAudit& a) {
    const int d = static_cast<int>(a.x0.size());
    os << "j,phase,direction,sign,leg,k,m,nu";
    for (int i = 0; i < d; ++i) os << ",step" << i;
    os << ",step_norm,cone_angle,alpha,beta\n";
    char buf[64];
    std::map<std::pair<const DefectFamily*, std::size_t>, std::pair<std::string, std::string>> names;
    for (const auto& s : a.steps) {
        const auto& cd = a.directions[s.direction];
        const DefectFamily* f = s.sign > 0 ? cd.forward.get() : cd.backward.get();
        auto key = std::make_pair(f, s.k);
        auto it = names.find(key);
        if (it == names.end()) {
            const FamilyMember m = f->member(s.k);
            it = names.emplace(key, std::make_pair(m.alpha, m.beta)).first;
        }
        os << s.j << ',' << phase_name(s.phase) << ',' << s.direction + 1 << ',' << s.sign << ',' << s.leg << ','
           << s.k << ',' << s.m.get_str() << ',' << (a.net_words[s.nu].empty() ? "e" : a.net_words[s.nu].str());
        for (int i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", s.step(i));
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", s.step_norm, s.cone_angle);
        os << buf << ",\"" << it->second.first << "\",\"" << it->second.second << "\"\n";
    }
}

void write_audit_report(std::ostream& os, const TangentAudit& a) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "n: %d\ns: %d\neps: %.6e\neta: %.6e\neps2: %.6e\nrho_prime: %.6e\n", a.params.n,
                  a.params.s, a.params.eps, a.params.eta, a.params.eps2, a.params.rho_prime);
    os << buf;
    if (a.params.theta) {
        std::snprintf(buf, sizeof buf, "theta: %.6e\n", *a.params.theta);
        os << buf;
    }
    os << "x0: " << format_vec(a.x0) << '\n';
    for (const auto& d : a.directions)
        os << "direction: " << format_vec(d.omega) << " forward " << d.forward->name()
           << (d.backward ? " backward " + d.backward->name() : std::string()) << '\n';
    os << "M: " << a.M.get_str() << '\n';
    std::snprintf(buf, sizeof buf, "c_star: %.6g\nsteps: %zu\nlegs: %zu\nwn_points: %zu\n", a.c_star, a.steps.size(),
                  a.legs.size(), static_cast<std::size_t>(std::count(a.in_wn.begin(), a.in_wn.end(), 1)));
    os << buf;
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& l : a.legs) ++counts[static_cast<int>(l.phase)];
    std::snprintf(buf, sizeof buf, "teeth: %zu\nreturns: %zu\nshifts: %zu\n", counts[0], counts[1], counts[2]);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "min step / (c*·c_gamma·eps): %.6f\nmax step / (3·eps): %.6f\nmax cone angle: %.3e (limit %.3e)\n",
                  a.min_step_ratio, a.max_step_ratio, a.max_cone_angle, std::asin(std::min(1.0, a.params.eta)));
    os << buf;
    os << "realizable: " << (a.realizable ? "true" : "false") << '\n';
    if (!std::isnan(a.hd_to_target)) {
        std::snprintf(buf, sizeof buf, "hausdorff_to_target: %.6e (bound s/n = %.6e)\n", a.hd_to_target,
                      static_cast<double>(a.params.s) / a.params.n);
        os << buf;
    }
    for (const auto& n : a.notes) os << "note: " << n << '\n';
}

}  // namespace olab
