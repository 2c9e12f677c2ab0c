#include "olab/config.hpp"

#include "olab/builtins.hpp"
#include "olab/dimension.hpp"
#include "olab/kernels.hpp"
#include "olab/subspace.hpp"
#include "olab/tangent.hpp"
#include "olab/wsp.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace olab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

double parse_plain(const std::string& s) {
    if (s.empty()) fail(ErrorCode::Config, "empty number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        fail(ErrorCode::Config, "not a number: '" + s + "'");
    return v;
}

std::string hex(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

double num(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) fail(ErrorCode::Config, what + ": expected a number");
    try {
        return parse_number(n.Scalar());
    } catch (const Error& e) {
        fail(ErrorCode::Config, what + ": " + e.what());
    }
}

long integer(const YAML::Node& n, const std::string& what) {
    const double v = num(n, what);
    if (v != std::floor(v) || std::abs(v) > 9e15) fail(ErrorCode::Config, what + ": expected an integer");
    return static_cast<long>(v);
}

std::string text(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) fail(ErrorCode::Config, what + ": expected a string");
    return n.Scalar();
}

Vec vec(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence() || n.size() == 0) fail(ErrorCode::Config, what + ": expected a list of numbers");
    Vec v(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) v(i) = num(n[i], what);
    return v;
}

Mat matrix(const YAML::Node& n, const std::string& what) {
    if (!n.IsSequence() || n.size() == 0) fail(ErrorCode::Config, what + ": expected a list of rows");
    const std::size_t rows = n.size();
    Mat m(rows, rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const Vec r = vec(n[i], what);
        if (static_cast<std::size_t>(r.size()) != rows) fail(ErrorCode::Config, what + ": matrix must be square");
        m.row(i) = r.transpose();
    }
    return m;
}

void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& where) {
    if (!n || n.IsNull()) return;
    if (!n.IsMap()) fail(ErrorCode::Config, where + ": expected a mapping");
    for (const auto& kv : n) {
        const std::string k = kv.first.as<std::string>();
        if (!allowed.count(k)) {
            std::string all;
            for (const auto& a : allowed) all += (all.empty() ? "" : ", ") + a;
            fail(ErrorCode::Config, where + ": unknown key '" + k + "' (allowed: " + all + ")");
        }
    }
}

Similarity parse_map(const YAML::Node& n, const std::string& where, int dim_hint) {
    check_keys(n, {"ratio", "rotation", "translation", "label", "from", "to"}, where);
    if (!n["ratio"] || !n["translation"]) fail(ErrorCode::Config, where + ": ratio and translation are required");
    const double c = num(n["ratio"], where + ".ratio");
    const Vec b = vec(n["translation"], where + ".translation");
    const int d = static_cast<int>(b.size());
    if (dim_hint > 0 && d != dim_hint) fail(ErrorCode::Config, where + ": dimension mismatch");
    const YAML::Node r = n["rotation"];
    OrthogonalMatrix o = OrthogonalMatrix::identity(d);
    if (r && r.IsScalar()) {
        if (d != 2) fail(ErrorCode::Config, where + ": a rotation angle needs dimension 2");
        o = OrthogonalMatrix::rotation2d(num(r, where + ".rotation"));
    } else if (r && r.IsMap()) {
        check_keys(r, {"axis", "angle", "matrix"}, where + ".rotation");
        if (r["matrix"]) {
            o = OrthogonalMatrix(matrix(r["matrix"], where + ".rotation.matrix"));
        } else {
            if (!r["axis"] || !r["angle"]) fail(ErrorCode::Config, where + ".rotation: need axis and angle");
            o = OrthogonalMatrix::axis_angle(vec(r["axis"], where + ".rotation.axis"),
                                             num(r["angle"], where + ".rotation.angle"));
        }
    } else if (r && !r.IsNull()) {
        fail(ErrorCode::Config, where + ".rotation: expected an angle or a mapping");
    }
    if (o.dim() != d) fail(ErrorCode::Config, where + ": rotation dimension mismatch");
    return Similarity(c, o, b);
}

std::vector<std::string> labels_of(const YAML::Node& maps) {
    std::vector<std::string> labels;
    bool any = false;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        if (maps[i]["label"]) {
            labels.push_back(text(maps[i]["label"], "label"));
            any = true;
        } else {
            labels.push_back("S" + std::to_string(i + 1));
        }
    }
    if (!any) labels.clear();
    return labels;
}

void parse_system(const YAML::Node& n, ExperimentConfig& cfg) {
    if (!n) fail(ErrorCode::Config, "missing 'system'");
    if (n.IsScalar()) {
        cfg.system_name = n.Scalar();
        const auto gd = gd_builtin_names();
        if (std::find(gd.begin(), gd.end(), cfg.system_name) != gd.end())
            cfg.gd = gd_builtin(cfg.system_name);
        else
            cfg.ifs = builtin(cfg.system_name);
        return;
    }
    check_keys(n, {"maps", "vertices", "edges"}, "system");
    if (n["maps"]) {
        const YAML::Node maps = n["maps"];
        if (!maps.IsSequence() || maps.size() == 0) fail(ErrorCode::Config, "system.maps: expected a non-empty list");
        std::vector<Similarity> sims;
        int d = 0;
        for (std::size_t i = 0; i < maps.size(); ++i) {
            const std::string where = "system.maps[" + std::to_string(i + 1) + "]";
            if (maps[i]["from"] || maps[i]["to"]) fail(ErrorCode::Config, where + ": from/to belong to graph edges");
            sims.push_back(parse_map(maps[i], where, d));
            d = sims.back().dim();
        }
        cfg.ifs = IfsSystem(std::move(sims), labels_of(maps));
        return;
    }
    if (!n["vertices"] || !n["edges"]) fail(ErrorCode::Config, "system: expected maps or vertices and edges");
    const long q = integer(n["vertices"], "system.vertices");
    const YAML::Node edges = n["edges"];
    if (!edges.IsSequence() || edges.size() == 0) fail(ErrorCode::Config, "system.edges: expected a non-empty list");
    std::vector<GdEdge> es;
    int d = 0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string where = "system.edges[" + std::to_string(i + 1) + "]";
        if (!edges[i]["from"] || !edges[i]["to"]) fail(ErrorCode::Config, where + ": from and to are required");
        const long from = integer(edges[i]["from"], where + ".from");
        const long to = integer(edges[i]["to"], where + ".to");
        if (from < 1 || from > q || to < 1 || to > q) fail(ErrorCode::Config, where + ": vertex out of range");
        es.push_back({static_cast<int>(from - 1), static_cast<int>(to - 1), parse_map(edges[i], where, d)});
        d = es.back().map.dim();
    }
    cfg.gd = GdSystem(static_cast<int>(q), std::move(es), labels_of(edges));
}

const std::map<std::string, std::set<std::string>>& task_keys() {
    static const std::map<std::string, std::set<std::string>> k = {
        {"sample", {"method", "delta", "points", "base", "budget", "seed"}},
        {"wsp", {"max_len", "budget", "evidence", "witness_threshold", "holds_threshold"}},
        {"directions", {"cluster_angle", "rho_steps", "angle_tol", "max_base_points"}},
        {"subspace", {"seed_directions", "closure_budget", "tol"}},
        {"dim", {"method", "ladder", "scales", "project"}},
        {"formula", {"max_depth", "closure_budget", "rank_tol", "ladder"}},
        {"tangent", {"n", "s", "rho", "theta", "family", "x0", "family_samples"}},
        {"gd", {"max_len", "budget", "evidence", "delta"}},
    };
    return k;
}

const char* module_of(const std::string& kind) {
    static const std::map<std::string, const char*> m = {
        {"sample", "attractor-sampler"}, {"wsp", "wsp-analyzer"},       {"directions", "wsp-analyzer"},
        {"subspace", "overlap-subspace"}, {"dim", "dimension-lab"},       {"formula", "dimension-lab"},
        {"tangent", "tangent-builder"},  {"gd", "graph-directed"},
    };
    auto it = m.find(kind);
    return it == m.end() ? "cli-config" : it->second;
}

void emit_vec(YAML::Emitter& e, const Vec& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < v.size(); ++i) e << hex(v(i));
    e << YAML::EndSeq;
}

void emit_map(YAML::Emitter& e, const Similarity& s, const std::string& label, int from, int to) {
    e << YAML::BeginMap;
    if (from >= 0) e << YAML::Key << "from" << YAML::Value << from + 1 << YAML::Key << "to" << YAML::Value << to + 1;
    e << YAML::Key << "ratio" << YAML::Value << hex(s.ratio);
    if (!s.orth.isIdentity(0.0)) {
        e << YAML::Key << "rotation" << YAML::Value << YAML::BeginMap << YAML::Key << "matrix" << YAML::Value
          << YAML::Flow << YAML::BeginSeq;
        for (Eigen::Index i = 0; i < s.orth.rows(); ++i) emit_vec(e, Vec(s.orth.row(i).transpose()));
        e << YAML::EndSeq << YAML::EndMap;
    }
    e << YAML::Key << "translation" << YAML::Value;
    emit_vec(e, s.trans);
    if (!label.empty()) e << YAML::Key << "label" << YAML::Value << label;
    e << YAML::EndMap;
}

struct Opt {
    const YAML::Node& n;
    std::string where;

    bool has(const char* k) const { return n && n.IsMap() && n[k]; }
    double number(const char* k, double dflt) const { return has(k) ? num(n[k], where + "." + k) : dflt; }
    long whole(const char* k, long dflt) const { return has(k) ? integer(n[k], where + "." + k) : dflt; }
    std::string str(const char* k, const std::string& dflt) const { return has(k) ? text(n[k], where + "." + k) : dflt; }
    std::size_t count(const char* k, std::size_t dflt) const {
        const long v = whole(k, static_cast<long>(dflt));
        if (v < 0) fail(ErrorCode::Config, where + "." + k + ": must be non-negative");
        return static_cast<std::size_t>(v);
    }
};

std::vector<ScalePair> parse_ladder(const YAML::Node& n, const std::string& where) {
    if (n.IsScalar() && n.Scalar() == "default") return {};
    if (!n.IsSequence()) fail(ErrorCode::Config, where + ": expected 'default' or a list of [R, r]");
    std::vector<ScalePair> out;
    for (const auto& row : n) {
        const Vec p = vec(row, where);
        if (p.size() != 2) fail(ErrorCode::Config, where + ": each rung is [R, r]");
        out.push_back({p(0), p(1)});
    }
    return out;
}

class Runner {
public:
    Runner(const ExperimentConfig& cfg, fs::path dir, std::optional<std::uint64_t> seed)
        : cfg_(cfg), dir_(std::move(dir)), seed_(seed) {}

    RunResult run() {
        RunResult res;
        if (cfg_.tasks.empty()) {
            fs::create_directories(dir_);
            res.message = "no tasks";
            return res;
        }
        fs::create_directories(dir_);
        for (std::size_t i = 0; i < cfg_.tasks.size(); ++i) {
            const TaskConfig& t = cfg_.tasks[i];
            const std::string tag = "task " + std::to_string(i + 1) + " (" + t.kind + ", module " + module_of(t.kind) + ")";
            try {
                dispatch(t, "tasks[" + std::to_string(i + 1) + "]." + t.kind);
            } catch (const Error& e) {
                res.exit_code = e.code() == ErrorCode::PointBudget ? 3 : 2;
                res.message = tag + ": " + e.what();
                break;
            } catch (const std::exception& e) {
                res.exit_code = 2;
                res.message = tag + ": " + e.what();
                break;
            }
            if (budget_hit_ && res.exit_code == 0) {
                res.exit_code = 3;
                res.message = tag + ": pair budget exhausted; results are partial";
            }
        }
        {
            std::ostringstream os;
            for (const auto& l : report_) os << l << '\n';
            if (!res.message.empty()) os << "status: " << res.message << '\n';
            else os << "status: ok\n";
            write("report.txt", os.str());
        }
        res.files = files_;
        if (res.message.empty()) res.message = "ok";
        return res;
    }

private:
    const ExperimentConfig& cfg_;
    fs::path dir_;
    std::optional<std::uint64_t> seed_;
    std::vector<std::string> files_;
    std::vector<std::string> report_;
    bool budget_hit_ = false;

    std::optional<PointCloud> cloud_;
    std::optional<WspVerdict> verdict_;
    WspOptions wsp_opts_;
    DirectionOptions dir_opts_;
    std::optional<std::vector<DirectionFinding>> findings_;
    std::optional<Subspace> subspace_;

    void write(const std::string& name, const std::string& body) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) fail(ErrorCode::Config, "cannot write " + (dir_ / name).string());
        f << body;
        if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    }

    template <class F>
    void emit(const std::string& name, F&& body) {
        std::ostringstream os;
        os.precision(17);
        body(os);
        write(name, os.str());
    }

    const IfsSystem& ifs(const std::string& kind) const {
        if (!cfg_.ifs) fail(ErrorCode::Precondition, kind + " needs an IFS system; the configured system is graph-directed");
        return *cfg_.ifs;
    }

    void dispatch(const TaskConfig& t, const std::string& where) {
        const Opt o{t.params, where};
        if (t.kind == "sample") return sample(o);
        if (t.kind == "wsp") return wsp(o);
        if (t.kind == "directions") return directions(o);
        if (t.kind == "subspace") return subspace(o);
        if (t.kind == "dim") return dim(o);
        if (t.kind == "formula") return formula(o);
        if (t.kind == "tangent") return tangent(o);
        if (t.kind == "gd") return gd(o);
        fail(ErrorCode::Config, "unknown task kind '" + t.kind + "'");
    }

    static void write_dat(std::ostream& os, const std::vector<Vec>& pts) {
        for (const Vec& p : pts) {
            for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? " " : "") << p(i);
            os << '\n';
        }
    }

    void sample(const Opt& o) {
        const IfsSystem& s = ifs("sample");
        const std::string method = o.str("method", "word-tree");
        const std::size_t budget = o.count("budget", kDefaultPointBudget);
        if (method == "word-tree") {
            const double delta = o.number("delta", std::pow(s.c_max(), 6));
            if (!(delta > 0.0)) fail(ErrorCode::Precondition, "delta must be positive");
            cloud_ = o.has("base") ? sample_word_tree(s, delta, vec(o.n["base"], o.where + ".base"), budget)
                                   : sample_word_tree(s, delta, budget);
        } else if (method == "chaos-game") {
            std::optional<std::uint64_t> seed = seed_;
            if (o.has("seed")) seed = static_cast<std::uint64_t>(o.whole("seed", 0));
            if (!seed) fail(ErrorCode::Config, "chaos-game sampling is stochastic; a seed is mandatory");
            const std::size_t n = o.count("points", 100000);
            if (n > budget) fail(ErrorCode::PointBudget, "requested points exceed the point budget");
            cloud_ = sample_chaos_game(s, n, *seed);
        } else {
            fail(ErrorCode::Config, o.where + ".method: expected word-tree or chaos-game");
        }
        emit("cloud.csv", [&](std::ostream& os) { write_cloud_csv(os, cloud_->points, cloud_->dim); });
        emit("attractor.dat", [&](std::ostream& os) { write_dat(os, cloud_->points); });
        std::ostringstream l;
        l << "sample: " << cloud_->size() << " points, method " << cloud_->provenance.method << ", resolution "
          << cloud_->resolution;
        report_.push_back(l.str());
    }

    WspOptions wsp_options(const Opt& o) const {
        WspOptions w;
        w.max_len = static_cast<int>(o.whole("max_len", w.max_len));
        w.budget = o.count("budget", w.budget);
        w.evidence_per_length = o.count("evidence", w.evidence_per_length);
        w.witness_threshold = o.number("witness_threshold", w.witness_threshold);
        w.holds_threshold = o.number("holds_threshold", w.holds_threshold);
        if (w.max_len < 1) fail(ErrorCode::Precondition, "max_len must be at least 1");
        return w;
    }

    void wsp(const Opt& o) {
        const IfsSystem& s = ifs("wsp");
        wsp_opts_ = wsp_options(o);
        verdict_ = analyze_wsp(s, wsp_opts_);
        findings_.reset();
        subspace_.reset();
        emit("verdict.txt", [&](std::ostream& os) { write_verdict_report(os, *verdict_); });
        emit("evidence.csv", [&](std::ostream& os) { write_evidence_csv(os, verdict_->evidence); });
        emit("floors.csv", [&](std::ostream& os) { write_floors_csv(os, *verdict_); });
        emit("floors.dat", [&](std::ostream& os) {
            for (const auto& f : verdict_->floors)
                if (std::isfinite(f.floor) && f.floor > 0.0) os << f.length << ' ' << f.floor << '\n';
        });
        report_.push_back(std::string("wsp: ") + status_name(verdict_->status) + ", " +
                          std::to_string(verdict_->pairs_evaluated) + " pairs" +
                          (verdict_->budget_exhausted ? ", budget exhausted" : ""));
        if (verdict_->budget_exhausted) budget_hit_ = true;
    }

    void need_cloud_and_verdict(const std::string& kind) const {
        if (!cloud_) fail(ErrorCode::Precondition, kind + " needs a prior sample task");
        if (!verdict_) fail(ErrorCode::Precondition, kind + " needs a prior wsp task");
    }

    void directions(const Opt& o) {
        const IfsSystem& s = ifs("directions");
        need_cloud_and_verdict("directions");
        dir_opts_.cluster_angle = o.number("cluster_angle", dir_opts_.cluster_angle);
        dir_opts_.extract.rho_steps = static_cast<int>(o.whole("rho_steps", dir_opts_.extract.rho_steps));
        dir_opts_.extract.angle_tol = o.number("angle_tol", dir_opts_.extract.angle_tol);
        dir_opts_.extract.max_base_points = o.count("max_base_points", dir_opts_.extract.max_base_points);
        findings_ = find_directions(s, *verdict_, *cloud_, wsp_opts_, dir_opts_);
        subspace_.reset();
        emit("directions.csv", [&](std::ostream& os) {
            os << "index";
            for (int i = 0; i < s.dim(); ++i) os << ",omega" << i;
            os << ",chain_length,final_defect,converged,swap_angle\n";
            for (std::size_t k = 0; k < findings_->size(); ++k) {
                const auto& f = (*findings_)[k];
                os << k + 1;
                for (Eigen::Index i = 0; i < f.direction.size(); ++i) os << ',' << f.direction(i);
                os << ',' << f.chain.size() << ',' << (f.chain.empty() ? 0.0 : f.chain.back().sup_norm) << ','
                   << (f.extraction.converged ? 1 : 0) << ',' << swap_angle(s, f) << '\n';
            }
        });
        report_.push_back("directions: " + std::to_string(findings_->size()) + " extracted");
    }

    // Angle between −ω and the direction extracted from the swapped chain.
    double swap_angle(const IfsSystem& s, const DirectionFinding& f) const {
        std::vector<DefectCertificate> swapped;
        for (const auto& c : f.chain) swapped.push_back(swap_certificate(s, c, verdict_->cube));
        const ExtractionResult r = extract_direction(swapped, *cloud_, dir_opts_.extract);
        if (!r.certificate.direction) return std::numeric_limits<double>::quiet_NaN();
        const double c = std::clamp(-r.certificate.direction->dot(f.direction), -1.0, 1.0);
        return std::acos(c);
    }

    void subspace(const Opt& o) {
        const IfsSystem& s = ifs("subspace");
        std::vector<Vec> seeds;
        if (o.has("seed_directions")) {
            for (const auto& v : o.n["seed_directions"]) seeds.push_back(vec(v, o.where + ".seed_directions"));
        } else if (findings_) {
            for (const auto& f : *findings_) seeds.push_back(f.direction);
        } else {
            fail(ErrorCode::Precondition, "subspace needs seed_directions or a prior directions task");
        }
        for (const Vec& v : seeds)
            if (v.size() != s.dim()) fail(ErrorCode::Precondition, "seed direction has the wrong dimension");
        const double tol = o.number("tol", 1e-6);
        const int budget = static_cast<int>(o.whole("closure_budget", 32));
        const ClosureResult r = group_closure(s, span_directions(seeds, s.dim(), tol), budget, tol);
        subspace_ = r.subspace;
        emit("subspace.txt", [&](std::ostream& os) { write_subspace_report(os, r); });
        report_.push_back("subspace: dim " + std::to_string(r.subspace.dim()) + " after " +
                          std::to_string(r.iterations) + " iteration(s)" + (r.stable ? "" : ", not stable"));
    }

    void dim(const Opt& o) {
        const IfsSystem& s = ifs("dim");
        const std::string method = o.str("method", "assouad");
        DimensionEstimate e;
        if (method == "similarity") {
            std::vector<double> ratios;
            for (const auto& m : s.maps()) ratios.push_back(m.ratio);
            e.value = e.lo = e.hi = similarity_dimension(ratios);
            e.method = "similarity";
        } else {
            if (!cloud_) fail(ErrorCode::Precondition, "dim needs a prior sample task");
            PointCloud c = *cloud_;
            if (o.has("project")) {
                Mat b(s.dim(), o.n["project"].size());
                for (std::size_t j = 0; j < o.n["project"].size(); ++j) {
                    const Vec v = vec(o.n["project"][j], o.where + ".project");
                    if (v.size() != s.dim()) fail(ErrorCode::Precondition, "projection vector has the wrong dimension");
                    b.col(j) = v;
                }
                if (Eigen::ColPivHouseholderQR<Mat>(b).rank() != b.cols())
                    fail(ErrorCode::Precondition, "projection vectors are dependent");
                c = project_cloud(c, Eigen::HouseholderQR<Mat>(b).householderQ() * Mat::Identity(b.rows(), b.cols()));
            }
            if (method == "assouad") {
                std::vector<ScalePair> ladder;
                if (o.has("ladder")) ladder = parse_ladder(o.n["ladder"], o.where + ".ladder");
                if (ladder.empty()) ladder = default_ladder(c);
                e = assouad_two_scale(c, ladder);
            } else if (method == "box") {
                std::vector<double> scales;
                if (o.has("scales")) {
                    const Vec v = vec(o.n["scales"], o.where + ".scales");
                    scales.assign(v.data(), v.data() + v.size());
                } else {
                    scales = default_box_scales(c);
                }
                e = box_dimension(c, scales);
            } else {
                fail(ErrorCode::Config, o.where + ".method: expected assouad, box or similarity");
            }
        }
        emit("dimension.csv", [&](std::ostream& os) { write_estimate_csv(os, e); });
        emit("dimension.txt", [&](std::ostream& os) { write_estimate_report(os, e); });
        std::ostringstream l;
        l.precision(10);
        l << "dim (" << e.method << "): " << e.value << " [" << e.lo << ", " << e.hi << "]";
        report_.push_back(l.str());
    }

    void formula(const Opt& o) {
        const IfsSystem& s = ifs("formula");
        need_cloud_and_verdict("formula");
        FormulaOptions fo;
        fo.wsp = wsp_opts_;
        fo.directions = dir_opts_;
        fo.max_depth = static_cast<int>(o.whole("max_depth", fo.max_depth));
        fo.closure_budget = static_cast<int>(o.whole("closure_budget", fo.closure_budget));
        fo.rank_tol = o.number("rank_tol", fo.rank_tol);
        if (o.has("ladder")) {
            auto l = parse_ladder(o.n["ladder"], o.where + ".ladder");
            if (!l.empty()) fo.ladder = l;
        }
        Subspace v = Subspace::zero(s.dim());
        if (subspace_) {
            v = *subspace_;
        } else if (verdict_->status == WspStatus::FailsWitnessed) {
            if (!findings_) fail(ErrorCode::Precondition, "formula on a witnessed failure needs a prior directions or subspace task");
            std::vector<Vec> dirs;
            for (const auto& f : *findings_) dirs.push_back(f.direction);
            if (!dirs.empty())
                v = group_closure(s, span_directions(dirs, s.dim(), fo.rank_tol), fo.closure_budget, fo.rank_tol).subspace;
        }
        const DimensionEstimate e = formula_pipeline(s, *verdict_, v, *cloud_, fo);
        emit("formula.csv", [&](std::ostream& os) { write_estimate_csv(os, e); });
        emit("formula.txt", [&](std::ostream& os) { write_estimate_report(os, e); });
        std::ostringstream l;
        l.precision(10);
        l << "formula: value " << e.value << " [" << e.lo << ", " << e.hi << "], dim V " << e.dim_v;
        report_.push_back(l.str());
    }

    void tangent(const Opt& o) {
        const IfsSystem& s = ifs("tangent");
        const int n = static_cast<int>(o.whole("n", 14));
        const int sdim = static_cast<int>(o.whole("s", 1));
        const std::size_t samples = o.count("family_samples", 0);
        std::optional<double> theta;
        if (o.has("theta")) theta = o.number("theta", 0.0);
        CombParams p = CombParams::make(n, sdim, o.number("rho", 1.0), theta);
        if (samples > 0 && !p.theta) p = CombParams::make(n, sdim, p.rho, p.rho_prime / 2);
        p.validate();

        const std::string family = o.str("family", cfg_.system_name.empty() ? "certificates" : "lacunary");
        std::vector<CombDirection> dirs;
        if (family == "lacunary") {
            if (cfg_.system_name.empty()) fail(ErrorCode::Precondition, "lacunary families exist only for builtin systems");
            dirs = builtin_comb_directions(cfg_.system_name, sdim);
        } else if (family == "certificates") {
            if (!findings_) fail(ErrorCode::Precondition, "certificate families need a prior directions task");
            if (static_cast<int>(findings_->size()) < sdim)
                fail(ErrorCode::Precondition, "only " + std::to_string(findings_->size()) + " direction(s) for s = " + std::to_string(sdim));
            const auto c0 = s.common_ratio();
            if (!c0) fail(ErrorCode::Precondition, "certificate families need a common contraction ratio");
            for (int i = 0; i < sdim; ++i) {
                const auto& f = (*findings_)[i];
                std::vector<DefectCertificate> back;
                for (const auto& c : f.chain) back.push_back(swap_certificate(s, c, verdict_->cube));
                auto fw = std::make_shared<ListFamily>(s, f.chain, Word({0}), *c0);
                auto bw = std::make_shared<ListFamily>(s, back, Word({0}), *c0);
                dirs.push_back(CombDirection{f.direction, fw, bw});
            }
        } else {
            fail(ErrorCode::Config, o.where + ".family: expected lacunary or certificates");
        }

        const Vec x0 = o.has("x0") ? vec(o.n["x0"], o.where + ".x0") : s.map(0).fixed_point();
        if (x0.size() != s.dim()) fail(ErrorCode::Precondition, "x0 has the wrong dimension");
        TangentAudit a = build_comb(s, dirs, x0, p);
        const double hd = verify_tangent_distance(a);
        emit("tangent_audit.csv", [&](std::ostream& os) { write_audit_csv(os, a); });
        emit("tangent.txt", [&](std::ostream& os) {
            write_audit_report(os, a);
            os << "hausdorff to target: " << hd << " (bound " << 1.0 / n << ")\n";
        });
        const std::vector<Vec> wn = a.wn_points();
        emit("wn.csv", [&](std::ostream& os) { write_cloud_csv(os, wn, s.dim()); });
        emit("wn.dat", [&](std::ostream& os) { write_dat(os, wn); });

        std::string extra;
        if (samples > 0) {
            // Points of F near x0: S_i^m(y) for the map i fixing x0 and y spread over the cloud.
            std::size_t fix = s.size();
            for (std::size_t i = 0; i < s.size() && fix == s.size(); ++i)
                if ((s.map(i).fixed_point() - x0).norm() < 1e-12) fix = i;
            if (fix == s.size()) fail(ErrorCode::Precondition, "family samples need x0 to be the fixed point of a map");
            const PointCloud base = cloud_ ? *cloud_ : sample_word_tree(s, std::pow(s.c_max(), 4));
            const double spread = std::max(base.diameter() + (base.points.front() - x0).norm(), 1e-300);
            int m = 0;
            while (std::pow(s.map(fix).ratio, m) * spread >= *p.theta) ++m;
            Similarity contract = Similarity::identity(s.dim());
            for (int i = 0; i < m; ++i) contract = compose(s.map(fix), contract);
            PointCloud xs;
            xs.dim = s.dim();
            for (std::size_t k = 0; k < samples; ++k)
                xs.points.push_back(contract.apply(base.points[k * base.size() / samples]));
            const CombFamily fam = build_comb_family(s, a, xs, *p.theta);
            double worst = 0.0;
            emit("family.csv", [&](std::ostream& os) {
                os << "index";
                for (int i = 0; i < s.dim(); ++i) os << ",x" << i;
                os << ",max_deviation\n";
                for (std::size_t k = 0; k < fam.xs.size(); ++k) {
                    os << k + 1;
                    for (Eigen::Index i = 0; i < fam.xs[k].size(); ++i) os << ',' << fam.xs[k](i);
                    os << ',' << fam.max_deviation[k] << '\n';
                    worst = std::max(worst, fam.max_deviation[k]);
                }
            });
            std::ostringstream l;
            l << ", family deviation " << worst << " over " << fam.xs.size() << " points";
            extra = l.str();
        }
        std::ostringstream l;
        l << "tangent: n " << n << ", s " << sdim << ", " << a.steps.size() << " steps, hausdorff " << hd << extra;
        report_.push_back(l.str());
    }

    void gd(const Opt& o) {
        if (!cfg_.gd) fail(ErrorCode::Precondition, "gd needs a graph-directed system");
        const GdSystem& g = *cfg_.gd;
        WspOptions w = wsp_options(o);
        w.evidence_per_length = o.count("evidence", w.evidence_per_length);
        const SccResult scc = strongly_connected(g);
        const double s = gd_dimension(g);
        const GdCrossCheck cc = gd_wsp_cross_check(g, w);
        for (std::size_t i = 0; i < cc.vertices.size(); ++i) {
            const std::string v = std::to_string(cc.vertices[i] + 1);
            emit("gd_floors_v" + v + ".csv", [&](std::ostream& os) { write_floors_csv(os, cc.verdicts[i]); });
            emit("gd_evidence_v" + v + ".csv", [&](std::ostream& os) { write_evidence_csv(os, cc.verdicts[i].evidence); });
            if (cc.verdicts[i].budget_exhausted) budget_hit_ = true;
        }
        emit("gd.txt", [&](std::ostream& os) {
            os << "vertices: " << g.vertices() << "\nedges: " << g.edges().size() << '\n';
            os << "strongly connected: " << (scc.strongly_connected ? "yes" : "no") << '\n';
            for (const auto& comp : scc.components) {
                os << "component:";
                for (int v : comp) os << ' ' << v + 1;
                os << '\n';
            }
            os << "dimension: " << s << '\n';
            for (std::size_t i = 0; i < cc.vertices.size(); ++i) {
                os << "vertex " << cc.vertices[i] + 1 << ":\n";
                write_verdict_report(os, cc.verdicts[i]);
            }
            os << "verdicts agree: " << (cc.agree ? "yes" : "no") << '\n';
        });
        if (o.has("delta")) {
            const auto clouds = gd_sample(g, o.number("delta", 0.0));
            for (std::size_t v = 0; v < clouds.size(); ++v)
                emit("gd_cloud_v" + std::to_string(v + 1) + ".csv",
                     [&](std::ostream& os) { write_cloud_csv(os, clouds[v].points, clouds[v].dim); });
        }
        std::ostringstream l;
        l.precision(12);
        l << "gd: dimension " << s << ", verdict " << status_name(cc.verdicts.front().status)
          << (cc.agree ? ", agree across vertices" : ", vertices disagree");
        report_.push_back(l.str());
    }
};

}  // namespace

double parse_number(const std::string& raw) {
    const std::string s = trim(raw);
    if (auto p = s.find('^'); p != std::string::npos)
        return std::pow(parse_plain(trim(s.substr(0, p))), parse_plain(trim(s.substr(p + 1))));
    if (auto p = s.find('/'); p != std::string::npos) {
        const double den = parse_plain(trim(s.substr(p + 1)));
        if (den == 0.0) fail(ErrorCode::Config, "division by zero in '" + s + "'");
        return parse_plain(trim(s.substr(0, p))) / den;
    }
    return parse_plain(s);
}

ExperimentConfig parse_config(const std::string& body) {
    YAML::Node root;
    try {
        root = YAML::Load(body);
    } catch (const YAML::Exception& e) {
        fail(ErrorCode::Config, std::string("malformed config: ") + e.what());
    }
    if (!root.IsMap()) fail(ErrorCode::Config, "config must be a mapping");
    check_keys(root, {"system", "seed", "threads", "output", "tasks"}, "config");
    ExperimentConfig cfg;
    parse_system(root["system"], cfg);
    if (root["seed"]) {
        const long s = integer(root["seed"], "seed");
        if (s < 0) fail(ErrorCode::Config, "seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (root["threads"]) {
        const long t = integer(root["threads"], "threads");
        if (t < 1) fail(ErrorCode::Config, "threads must be at least 1");
        cfg.threads = static_cast<int>(t);
    }
    if (root["output"]) cfg.output = text(root["output"], "output");
    if (const YAML::Node tasks = root["tasks"]) {
        if (!tasks.IsSequence() && !tasks.IsNull()) fail(ErrorCode::Config, "tasks: expected a list");
        for (std::size_t i = 0; tasks.IsSequence() && i < tasks.size(); ++i) {
            const std::string where = "tasks[" + std::to_string(i + 1) + "]";
            TaskConfig t;
            if (tasks[i].IsScalar()) {
                t.kind = tasks[i].Scalar();
            } else if (tasks[i].IsMap() && tasks[i].size() == 1) {
                t.kind = tasks[i].begin()->first.as<std::string>();
                t.params = YAML::Clone(tasks[i].begin()->second);
            } else {
                fail(ErrorCode::Config, where + ": expected a task name or a single-key mapping");
            }
            auto it = task_keys().find(t.kind);
            if (it == task_keys().end()) fail(ErrorCode::Config, where + ": unknown task '" + t.kind + "'");
            check_keys(t.params, it->second, where + "." + t.kind);
            cfg.tasks.push_back(std::move(t));
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::Config, "cannot read config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    YAML::Emitter e;
    e << YAML::BeginMap << YAML::Key << "system" << YAML::Value;
    if (!cfg.system_name.empty()) {
        e << cfg.system_name;
    } else if (cfg.ifs) {
        e << YAML::BeginMap << YAML::Key << "maps" << YAML::Value << YAML::BeginSeq;
        for (std::size_t i = 0; i < cfg.ifs->size(); ++i)
            emit_map(e, cfg.ifs->map(i), cfg.ifs->labels().empty() ? "" : cfg.ifs->labels()[i], -1, -1);
        e << YAML::EndSeq << YAML::EndMap;
    } else if (cfg.gd) {
        e << YAML::BeginMap << YAML::Key << "vertices" << YAML::Value << cfg.gd->vertices() << YAML::Key << "edges"
          << YAML::Value << YAML::BeginSeq;
        for (std::size_t i = 0; i < cfg.gd->edges().size(); ++i) {
            const GdEdge& ed = cfg.gd->edges()[i];
            emit_map(e, ed.map, cfg.gd->labels().empty() ? "" : cfg.gd->labels()[i], ed.from, ed.to);
        }
        e << YAML::EndSeq << YAML::EndMap;
    } else {
        fail(ErrorCode::Config, "config has no system");
    }
    if (cfg.seed) e << YAML::Key << "seed" << YAML::Value << *cfg.seed;
    if (cfg.threads) e << YAML::Key << "threads" << YAML::Value << *cfg.threads;
    e << YAML::Key << "output" << YAML::Value << cfg.output;
    e << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : cfg.tasks) {
        e << YAML::BeginMap << YAML::Key << t.kind << YAML::Value;
        if (t.params && !t.params.IsNull())
            e << t.params;
        else
            e << YAML::Flow << YAML::BeginMap << YAML::EndMap;
        e << YAML::EndMap;
    }
    e << YAML::EndSeq << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

int resolve_threads(std::optional<int> requested) {
    if (requested) {
        if (*requested < 1) fail(ErrorCode::Config, "threads must be at least 1");
        return *requested;
    }
    if (const char* env = std::getenv("OVERLAP_LAB_THREADS")) {
        const double v = parse_plain(trim(env));
        if (v < 1 || v != std::floor(v)) fail(ErrorCode::Config, "OVERLAP_LAB_THREADS must be a positive integer");
        return static_cast<int>(v);
    }
    return kernels::max_threads();
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOverrides& over) {
    const int threads = resolve_threads(over.threads ? over.threads : cfg.threads);
    const int previous = kernels::max_threads();
    kernels::set_threads(threads);
    Runner r(cfg, over.output.value_or(cfg.output), over.seed ? over.seed : cfg.seed);
    RunResult res = r.run();
    kernels::set_threads(previous);
    return res;
}

}  // namespace olab
