#pragma once

// Experiment drivers behind the CLI. All randomness comes from run.seed,
// split by label: "problem" (noise, toy draws), "sampling", "probes",
// "frames" (motion and frame noise).

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stik/config.hpp"
#include "stik/records.hpp"
#include "stik/regparam.hpp"
#include "stik/solvers.hpp"
#include "stik/superres.hpp"

namespace stik {

struct LoadedProblem {
    InverseProblem problem;
    SamplePlan plan;
    /// High-res side for image problems, 0 otherwise.
    Index image_side = 0;
};

/// Builds the problem named by problem.source: a generated test problem, a
/// directory with A.txt, b.txt and optionally x_true.txt / sigma2.txt, or a
/// frame directory (problem.path) / synthetic frames for superres runs.
LoadedProblem load_problem(const ExperimentConfig& config, std::uint64_t seed);
LoadedProblem load_superres_problem(const ExperimentConfig& config, std::uint64_t seed);

struct GeneratedFrames {
    FrameSet frames;
    Vector image;
};

/// Frames from the superres section: superres.image (PGM) or the synthetic image.
GeneratedFrames make_config_frames(const ExperimentConfig& config, std::uint64_t seed);

SolverOptions make_solver_options(const ExperimentConfig& config);
SelectorOptions make_selector_options(const ExperimentConfig& config, std::uint64_t seed);
/// FixedIncrement(lambda / M) or a SelectorPolicy; nullptr for rrls.
std::unique_ptr<IncrementPolicy> make_policy(const ExperimentConfig& config, Index blocks, std::uint64_t seed);

struct ExperimentResult {
    RunResult run;
    std::optional<double> final_relerr;
    double final_lambda_eff = 0.0;
};

ExperimentResult run_loaded(const ExperimentConfig& config, const LoadedProblem& loaded, std::uint64_t seed);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Seed of replicate r (r = 0 keeps the base seed).
std::uint64_t replicate_seed(std::uint64_t seed, long r);

/// Worker count for `jobs` tasks: STIK_THREADS when set, else hardware concurrency.
int worker_threads(long jobs);

struct ReplicateSummary {
    long replicate = 0;
    std::optional<double> final_relerr;
    double final_lambda_eff = 0.0;
};

/// run.replicates independent runs in parallel workers, in replicate order.
std::vector<ReplicateRecords> run_replicates(const ExperimentConfig& config,
                                             std::vector<ReplicateSummary>* summaries = nullptr);

struct ParamSelection {
    std::uint64_t k = 0;
    Index tau = 0;
    SelectionResult result;
};

/// Runs `steps` steps of the configured method, then applies `method` to the
/// block of step steps + 1.
ParamSelection select_param(const ExperimentConfig& config, SelectionMethod method, std::uint64_t steps);

struct ToyPoint {
    std::string series;  // rrls | stik | tikhonov | reference
    long epoch = 0;
    double lambda = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
};

/// Per-epoch rrls and sTik iterates on toy2d (random sampling with
/// replacement, effective parameter `lambda`), plus the Tikhonov path x(lambda).
std::vector<ToyPoint> toy_figure(std::uint64_t seed, long epochs, double lambda);
void write_toy_csv(std::ostream& out, const std::vector<ToyPoint>& points);

}  // namespace stik
