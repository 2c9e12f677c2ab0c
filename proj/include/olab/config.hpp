#pragma once

#include "olab/geometry.hpp"
#include "olab/graph.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace olab {

struct TaskConfig {
    std::string kind;  // sample | wsp | directions | subspace | dim | formula | tangent | gd
    YAML::Node params;
};

struct ExperimentConfig {
    std::string system_name;  // builtin name; empty for inline systems
    std::optional<IfsSystem> ifs;
    std::optional<GdSystem> gd;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string output = "out";
    std::vector<TaskConfig> tasks;
};

// Numbers accept decimal, hex-float (0x1.8p-3) and power (5^-6) forms.
double parse_number(const std::string& text);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

struct RunOverrides {
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 task precondition failure, 3 budget exhausted
    std::string message;
    std::vector<std::string> files;
};

RunResult run_experiment(const ExperimentConfig& cfg, const RunOverrides& over = {});

// Threads from an explicit value, then OVERLAP_LAB_THREADS, else the OpenMP default.
int resolve_threads(std::optional<int> requested);

}  // namespace olab
