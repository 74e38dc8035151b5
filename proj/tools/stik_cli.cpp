// stik: command-line driver.
//
//   stik gen-problem   --name gravity --n 100 --noise level --noise-value 0.01 --out DIR
//   stik run           [--config FILE] [--set key=value]... [--epochs E] [--replicates R] [--out CSV]
//   stik select-param  [--config FILE] --method sgcv [--steps S]
//   stik superres-run  [--config FILE] [--out CSV] [--image-out PGM] [--frames-out DIR]
//   stik toy-figure    [--seed S] [--epochs E] [--lambda L] [--out CSV]
//
// Exit status: 0 success, 1 invalid input, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stik/config.hpp"
#include "stik/errors.hpp"
#include "stik/experiments.hpp"
#include "stik/pgm.hpp"
#include "stik/problems.hpp"
#include "stik/superres.hpp"
#include "stik/textio.hpp"

namespace {

struct ConfigArgs {
    std::string file;
    std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("-c,--config", args.file, "Experiment config file (INI style)");
    cmd->add_option("--set", args.overrides, "Override a config key: section.key=value");
}

stik::ExperimentConfig build_config(const ConfigArgs& args) {
    stik::ExperimentConfig cfg = args.file.empty() ? stik::ExperimentConfig{} : stik::load_config(args.file);
    for (const auto& o : args.overrides) stik::apply_override(cfg, o);
    stik::validate_config(cfg);
    return cfg;
}

// Writes to `path`, or stdout when empty or "-".
template <class F>
void with_output(const std::string& path, F write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) throw stik::InvalidArgument("cannot write " + path);
    write(out);
    if (!out) throw stik::InvalidArgument("write failed: " + path);
}

std::string relerr_text(const std::optional<double>& r) { return r ? stik::format_double(*r) : "nan"; }

void print_summary(const stik::ExperimentResult& res) {
    std::cerr << "final_relerr=" << relerr_text(res.final_relerr)
              << ", final_lambda_eff=" << stik::format_double(res.final_lambda_eff) << '\n';
    for (const auto& w : res.run.warnings) std::cerr << "warning: " << w << '\n';
    std::map<std::string, long> flagged;
    for (const auto& r : res.run.records)
        if (!r.flag.empty()) ++flagged[r.flag];
    for (const auto& [flag, count] : flagged) std::cerr << "flagged " << flag << ": " << count << " step(s)\n";
}

int cmd_gen_problem(const std::string& name, long n, const std::string& noise, double noise_value,
                    std::uint64_t seed, const std::string& out_dir) {
    stik::TestProblemSpec spec;
    spec.name = name;
    spec.n = n;
    spec.noise = stik::parse_noise_mode(noise);
    spec.noise_value = noise_value;
    spec.seed = stik::derive_seed(seed, "problem");
    const stik::InverseProblem p = stik::gen_test_problem(spec);
    const std::filesystem::path dir = out_dir;
    std::filesystem::create_directories(dir);
    stik::write_matrix(dir / "A.txt", p.A->to_dense());
    stik::write_vector(dir / "b.txt", p.b);
    if (p.x_true) stik::write_vector(dir / "x_true.txt", *p.x_true);
    if (p.sigma2) stik::write_vector(dir / "sigma2.txt", stik::Vector::Constant(1, *p.sigma2));
    std::cerr << "wrote " << p.rows() << "x" << p.cols() << " problem '" << name << "' to " << dir.string() << '\n';
    return 0;
}

int cmd_run(stik::ExperimentConfig cfg, std::optional<long> epochs, std::optional<long> replicates,
            const std::string& out) {
    if (epochs) cfg.run.epochs = *epochs;
    if (replicates) cfg.run.replicates = *replicates;
    stik::validate_config(cfg);
    const std::string path = out.empty() ? cfg.output.csv : out;
    if (cfg.run.replicates == 1) {
        const stik::ExperimentResult res = stik::run_experiment(cfg);
        with_output(path, [&](std::ostream& os) { stik::write_records_csv(os, res.run.records, cfg.output.timing); });
        print_summary(res);
        return 0;
    }
    std::vector<stik::ReplicateSummary> sums;
    const auto runs = stik::run_replicates(cfg, &sums);
    with_output(path, [&](std::ostream& os) { stik::write_replicates_csv(os, runs, cfg.output.timing); });
    for (const auto& s : sums) {
        std::cerr << "replicate=" << s.replicate << ", final_relerr=" << relerr_text(s.final_relerr)
                  << ", final_lambda_eff=" << stik::format_double(s.final_lambda_eff) << '\n';
    }
    return 0;
}

int cmd_select_param(const stik::ExperimentConfig& cfg, const std::string& method, std::uint64_t steps) {
    const stik::ParamSelection sel = stik::select_param(cfg, stik::parse_selection_method(method), steps);
    std::cout << "k=" << sel.k << ", tau=" << sel.tau << ", method=" << stik::to_string(sel.result.method)
              << ", Lambda=" << stik::format_double(sel.result.increment)
              << ", lambda=" << stik::format_double(sel.result.lambda_total)
              << ", objective=" << stik::format_double(sel.result.objective)
              << ", evaluations=" << sel.result.evaluations;
    if (!sel.result.flag.empty()) std::cout << ", flag=" << sel.result.flag;
    std::cout << '\n';
    return 0;
}

int cmd_superres(const stik::ExperimentConfig& cfg, const std::string& out, const std::string& image_out,
                 const std::string& frames_out) {
    const stik::LoadedProblem loaded = stik::load_superres_problem(cfg, cfg.run.seed);
    if (!frames_out.empty()) {
        if (cfg.problem.source == "frames") throw stik::InvalidArgument("--frames-out needs generated frames");
        stik::write_frame_directory(frames_out, stik::make_config_frames(cfg, cfg.run.seed).frames);
    }
    const stik::ExperimentResult res = stik::run_loaded(cfg, loaded, cfg.run.seed);
    const std::string path = out.empty() ? cfg.output.csv : out;
    with_output(path, [&](std::ostream& os) { stik::write_records_csv(os, res.run.records, cfg.output.timing); });
    if (!image_out.empty()) {
        stik::GrayImage img;
        img.width = loaded.image_side;
        img.height = loaded.image_side;
        img.maxval = 255;
        img.pixels = res.run.x * 255.0;
        stik::write_pgm(image_out, img);
    }
    print_summary(res);
    return 0;
}

int cmd_toy_figure(std::uint64_t seed, long epochs, double lambda, const std::string& out) {
    const auto points = stik::toy_figure(seed, epochs, lambda);
    with_output(out, [&](std::ostream& os) { stik::write_toy_csv(os, points); });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampled Tikhonov iterations for linear inverse problems"};
    app.require_subcommand(1);

    // gen-problem
    auto* gen = app.add_subcommand("gen-problem", "Write a test problem as A.txt, b.txt, x_true.txt");
    std::string gen_name = "gravity";
    long gen_n = 100;
    std::string gen_noise = "none";
    double gen_noise_value = 0.0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--name", gen_name, "gravity | shaw | baart | prolate | toy2d")->capture_default_str();
    gen->add_option("--n", gen_n, "Problem size")->capture_default_str();
    gen->add_option("--noise", gen_noise, "none | level | variance")->capture_default_str();
    gen->add_option("--noise-value", gen_noise_value, "Noise level or variance")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->required();

    // run
    auto* run = app.add_subcommand("run", "Run a sampled iteration and write per-step records as CSV");
    ConfigArgs run_cfg;
    add_config_options(run, run_cfg);
    std::optional<long> run_epochs;
    std::optional<long> run_replicates;
    std::string run_out;
    run->add_option("--epochs", run_epochs, "Number of epochs (overrides run.epochs)");
    run->add_option("--replicates", run_replicates, "Independent seeded replicates (overrides run.replicates)");
    run->add_option("-o,--out", run_out, "CSV path (default output.csv, else stdout)");

    // select-param
    auto* sel = app.add_subcommand("select-param", "Apply a parameter selector at one step");
    ConfigArgs sel_cfg;
    add_config_options(sel, sel_cfg);
    std::string sel_method = "sgcv";
    std::uint64_t sel_steps = 0;
    sel->add_option("--method", sel_method, "sdp | supre | sgcv")->capture_default_str();
    sel->add_option("--steps", sel_steps, "Steps taken before selecting")->capture_default_str();

    // superres-run
    auto* sr = app.add_subcommand("superres-run", "Super-resolution reconstruction from low-res frames");
    ConfigArgs sr_cfg;
    add_config_options(sr, sr_cfg);
    std::string sr_out;
    std::string sr_image;
    std::string sr_frames;
    sr->add_option("-o,--out", sr_out, "CSV path");
    sr->add_option("--image-out", sr_image, "Write the reconstruction as PGM");
    sr->add_option("--frames-out", sr_frames, "Also write the generated frames to this directory");

    // toy-figure
    auto* toy = app.add_subcommand("toy-figure", "Per-epoch iterates on the 10x2 toy problem");
    std::uint64_t toy_seed = 0;
    long toy_epochs = 200;
    double toy_lambda = 0.2;
    std::string toy_out;
    toy->add_option("--seed", toy_seed, "Seed")->capture_default_str();
    toy->add_option("--epochs", toy_epochs, "Epochs")->capture_default_str();
    toy->add_option("--lambda", toy_lambda, "Effective regularization parameter")->capture_default_str();
    toy->add_option("-o,--out", toy_out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_gen_problem(gen_name, gen_n, gen_noise, gen_noise_value, gen_seed, gen_out);
        if (*run) return cmd_run(build_config(run_cfg), run_epochs, run_replicates, run_out);
        if (*sel) return cmd_select_param(build_config(sel_cfg), sel_method, sel_steps);
        if (*sr) return cmd_superres(build_config(sr_cfg), sr_out, sr_image, sr_frames);
        if (*toy) return cmd_toy_figure(toy_seed, toy_epochs, toy_lambda, toy_out);
    } catch (const stik::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
