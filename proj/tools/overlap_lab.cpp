#include "olab/builtins.hpp"
#include "olab/config.hpp"
#include "olab/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Flags {
    std::string system = "F1";
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::size_t> budget;
    std::optional<int> max_len;
    std::string ladder;
    std::optional<int> n;
    std::string delta;
    std::optional<int> s;
    std::string theta;
    std::string method;
    std::optional<std::size_t> family_samples;
    bool print_config = false;
};

// "R:r,R:r,..." or "default".
YAML::Node ladder_node(const std::string& spec) {
    if (spec == "default") return YAML::Node("default");
    YAML::Node rows(YAML::NodeType::Sequence);
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) olab::fail(olab::ErrorCode::Config, "--ladder expects R:r pairs separated by commas");
        YAML::Node row(YAML::NodeType::Sequence);
        row.push_back(item.substr(0, colon));
        row.push_back(item.substr(colon + 1));
        rows.push_back(row);
    }
    return rows;
}

olab::TaskConfig task(const std::string& kind, const Flags& f) {
    olab::TaskConfig t{kind, YAML::Node(YAML::NodeType::Map)};
    YAML::Node& p = t.params;
    if (kind == "sample" && !f.delta.empty()) p["delta"] = f.delta;
    if (kind == "wsp" || kind == "gd") {
        if (f.max_len) p["max_len"] = *f.max_len;
        if (f.budget) p["budget"] = *f.budget;
    }
    if (kind == "gd" && !f.delta.empty()) p["delta"] = f.delta;
    if ((kind == "dim" || kind == "formula") && !f.ladder.empty()) p["ladder"] = ladder_node(f.ladder);
    if (kind == "dim" && !f.method.empty()) p["method"] = f.method;
    if (kind == "tangent") {
        if (f.n) p["n"] = *f.n;
        if (f.s) p["s"] = *f.s;
        if (!f.theta.empty()) p["theta"] = f.theta;
        if (f.family_samples) p["family_samples"] = *f.family_samples;
        if (!f.method.empty()) p["family"] = f.method;
    }
    if (p.size() == 0) t.params = YAML::Node();
    return t;
}

int execute(const olab::ExperimentConfig& cfg, const olab::RunOverrides& over, bool print_config) {
    if (print_config) std::cout << olab::serialize_config(cfg);
    const olab::RunResult r = olab::run_experiment(cfg, over);
    const std::string dir = over.output.value_or(cfg.output);
    std::ifstream report(dir + "/report.txt");
    if (report) std::cout << report.rdbuf();
    if (r.exit_code != 0) std::cerr << "overlap_lab: " << r.message << '\n';
    std::cout << "wrote " << r.files.size() << " file(s) to " << dir << '\n';
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Overlap analysis of self-similar sets: sampling, weak separation search, overlap subspaces, "
                 "dimension estimates and tangent combs."};
    app.require_subcommand(1);
    Flags f;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--system", f.system, "builtin system name")->capture_default_str();
        sub->add_option("--out", f.out, "output directory")->capture_default_str();
        sub->add_option("--seed", f.seed, "seed for stochastic tasks");
        sub->add_option("--threads", f.threads, "worker threads (default: OVERLAP_LAB_THREADS or all cores)");
        sub->add_option("--budget", f.budget, "pair budget of the defect search");
        sub->add_option("--max-len", f.max_len, "maximal word length of the defect search");
        sub->add_option("--ladder", f.ladder, "two-scale ladder: 'default' or R:r,R:r,...");
        sub->add_option("--n", f.n, "comb parameter n (at least 14)");
        sub->add_option("--delta", f.delta, "sampling scale, e.g. 5^-6");
        sub->add_option("--s", f.s, "number of comb directions");
        sub->add_option("--theta", f.theta, "family radius for comb families");
        sub->add_option("--method", f.method, "dim: assouad|box|similarity; tangent: lacunary|certificates");
        sub->add_option("--family-samples", f.family_samples, "sample points for the comb family check");
        sub->add_flag("--print-config", f.print_config, "print the equivalent config before running");
    };

    const std::vector<std::pair<std::string, std::vector<std::string>>> verbs = {
        {"sample", {"sample"}},
        {"wsp", {"wsp"}},
        {"directions", {"sample", "wsp", "directions"}},
        {"subspace", {"sample", "wsp", "directions", "subspace"}},
        {"dim", {"sample", "dim"}},
        {"formula", {"sample", "wsp", "directions", "subspace", "formula"}},
        {"tangent", {"tangent"}},
        {"gd", {"gd"}},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, chain] : verbs) {
        auto* sub = app.add_subcommand(name, "run the " + name + " task with its prerequisites");
        common(sub);
        subs.push_back(sub);
    }
    std::string config_path;
    auto* run = app.add_subcommand("run", "run every task of a config file");
    run->add_option("config", config_path, "YAML config")->required()->check(CLI::ExistingFile);
    run->add_option("--out", f.out, "output directory (overrides the config)");
    run->add_option("--seed", f.seed, "seed (overrides the config)");
    run->add_option("--threads", f.threads, "worker threads (overrides the config)");
    run->add_flag("--print-config", f.print_config, "print the parsed config before running");
    auto* list = app.add_subcommand("list", "list builtin systems");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& n : olab::builtin_names()) std::cout << n << '\n';
            for (const auto& n : olab::gd_builtin_names()) std::cout << n << " (graph-directed)\n";
            return 0;
        }
        if (run->parsed()) {
            const olab::ExperimentConfig cfg = olab::load_config(config_path);
            olab::RunOverrides over;
            if (!run->get_option("--out")->empty()) over.output = f.out;
            over.seed = f.seed;
            over.threads = f.threads;
            return execute(cfg, over, f.print_config);
        }
        for (std::size_t i = 0; i < verbs.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            olab::ExperimentConfig cfg;
            const std::string yaml = "system: " + f.system + "\n";
            cfg = olab::parse_config(yaml);
            cfg.output = f.out;
            cfg.seed = f.seed;
            cfg.threads = f.threads;
            for (const auto& kind : verbs[i].second) cfg.tasks.push_back(task(kind, f));
            return execute(cfg, {}, f.print_config);
        }
    } catch (const olab::Error& e) {
        std::cerr << "overlap_lab: " << olab::error_code_name(e.code()) << ": " << e.what() << '\n';
        return 2;
    }
    return 0;
}
