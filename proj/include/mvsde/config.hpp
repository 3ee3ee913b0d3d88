#pragma once

#include "mvsde/common.hpp"
#include "mvsde/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvsde {

inline constexpr const char* kToolkitVersion = "mvsde 0.1.0";

// One experiment, fully described: which runner, which coefficients, grid,
// seed, initial law, outputs and tolerances. The seed has no default; every
// acceptance-relevant threshold comes from the tolerances block.
struct ExperimentConfig {
    std::string experiment;
    std::string coeff_name;
    std::map<std::string, double> coeff_params;
    int d = 1;
    int d1 = 1;
    long particles = 1;
    long steps = 0;
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> stopping_radius;
    InitialLaw initial;
    long record = 64;
    std::string output_dir = "out";
    int workers = 1;
    nlohmann::json tolerances = nlohmann::json::object();
    // Experiment-specific block, keyed by the experiment name.
    nlohmann::json extra = nlohmann::json::object();
    nlohmann::json raw; // canonical document, used for hashing

    KernelCoefficients coefficients() const;
    SimulationSpec simulation_spec() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

std::vector<std::string> experiment_names();

// FNV-1a over the canonical dump.
std::string config_hash(const nlohmann::json& doc);

struct RunManifest {
    std::string config_hash;
    std::string version;
    double wall_time_s = 0.0;
    std::string report_path;
    std::vector<std::string> csv_paths;
    bool ok = true;

    nlohmann::json to_json() const;
};

} // namespace mvsde
