#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace batlab {

/// @file experiment.hpp
/// Named experiments behind the CLI: flat key = value configs, CSV and
/// optional SVG outputs, and a JSON run manifest written last. Reruns with
/// the same config produce byte-identical CSVs (fixed seeds, fixed reduction
/// order, %.17g formatting).

struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(std::string f, const std::string& why)
        : std::runtime_error(f + ": " + why), field(std::move(f)) {}
};

struct ExperimentConfig {
    std::string experiment;  // mixing | projected-mixing | batchelor | flux |
                             // geometry | norms | evolve
    std::vector<double> alphas = {8.0};
    int n_max = 4;
    int n_steps = 6;
    int grid_m = 2048;
    std::vector<int> cutoffs = {4, 8, 16, 32, 64};
    int kernel_n = 16;
    double kappa = 0.0;
    int quad_points = 32;
    int dict_vertical = 64;
    int dict_random = 64;
    long long piece_budget = 200'000'000;
    std::string forcing_h = "sine";  // sine | geometric
    std::uint64_t seed = 7001;
    std::string out_dir = ".";
    int threads = 0;
    bool svg = false;

    /// Parse "key = value" lines ('#' comments). Unknown keys and malformed
    /// values raise ValidationError naming the field.
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig parse_file(const std::string& path);

    /// Check every precondition the experiments rely on.
    void validate() const;
};

struct StageTime {
    std::string name;
    double seconds;
};

struct RunManifest {
    std::string experiment;
    std::string config_echo;
    std::string version;
    std::vector<StageTime> stages;
    std::vector<std::string> guard_flags;  // alias / guard events encountered
    std::vector<std::string> outputs;      // files written (relative paths)
    std::string to_json() const;
};

/// Dispatch, write outputs, write the manifest last.
RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace batlab
