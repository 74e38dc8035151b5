#pragma once

// Experiment configuration: an INI-style file of `key = value` lines grouped
// in [section]s. Keys are addressed as section.key (e.g. regparam.grid.min).
// Unknown sections or keys are rejected. `#` and `;` start comments.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stik {

struct ExperimentConfig {
    struct Problem {
        std::string source = "generated";  // generated | files | frames
        std::string name = "gravity";
        long n = 100;
        std::string noise = "level";
        double noise_value = 0.01;
        double prolate_w = 0.25;
        double gravity_depth = 0.25;
        std::string path;  // directory for files / frames
        bool operator==(const Problem&) const = default;
    } problem;

    struct Sampling {
        long blocks = 10;
        std::string strategy = "cyclic";
        bool operator==(const Sampling&) const = default;
    } sampling;

    struct Solver {
        std::string method = "stik";
        long memory = 0;
        double lsqr_tol = 1e-10;
        long lsqr_maxit = 0;
        bool operator==(const Solver&) const = default;
    } solver;

    struct Regparam {
        std::string method = "fixed";  // fixed | sdp | supre | sgcv
        /// Effective parameter: fixed runs use Lambda_i = lambda / M; rrls uses it directly.
        double lambda = 0.1;
        /// Effective parameter for the first step of an adaptive run.
        std::optional<double> initial;
        double gamma = 4.0;
        std::optional<double> sigma2;
        double grid_min = 1e-8;
        double grid_max = 1e2;
        long grid_points = 40;
        long grid_refine = 24;
        std::string trace = "exact";
        long probes = 1;
        bool operator==(const Regparam&) const = default;
    } regparam;

    struct Superres {
        long n = 128;
        long ell = 32;
        long frames = 8;
        double max_shift = 2.0;
        double max_angle = 0.05;
        double noise_level = 0.01;
        std::string image;  // optional PGM; synthetic image when empty
        bool operator==(const Superres&) const = default;
    } superres;

    struct Run {
        long epochs = 1;
        std::uint64_t seed = 0;
        long replicates = 1;
        bool operator==(const Run&) const = default;
    } run;

    struct Output {
        std::string csv;
        bool timing = false;
        bool operator==(const Output&) const = default;
    } output;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::istream& in, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `section.key=value` override.
void apply_override(ExperimentConfig& config, const std::string& assignment);
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Every key, in a fixed order; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);
std::vector<std::string> config_keys();

/// Range and enum checks; throws InvalidArgument naming the offending key.
void validate_config(const ExperimentConfig& config);

}  // namespace stik
