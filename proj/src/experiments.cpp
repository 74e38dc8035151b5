#include "stik/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <ostream>
#include <thread>

#include "stik/errors.hpp"
#include "stik/pgm.hpp"
#include "stik/problems.hpp"
#include "stik/superres.hpp"
#include "stik/textio.hpp"

namespace stik {

namespace {

LoadedProblem load_files(const ExperimentConfig& c) {
    const std::filesystem::path dir = c.problem.path;
    LoadedProblem out;
    out.problem.A = make_dense(read_matrix(dir / "A.txt"));
    out.problem.b = read_vector(dir / "b.txt");
    out.problem.L = make_identity(out.problem.A->cols());
    if (std::filesystem::exists(dir / "x_true.txt")) out.problem.x_true = read_vector(dir / "x_true.txt");
    if (std::filesystem::exists(dir / "sigma2.txt")) {
        const Vector s = read_vector(dir / "sigma2.txt");
        if (s.size() != 1) throw InvalidArgument((dir / "sigma2.txt").string() + ": expected one value");
        out.problem.sigma2 = s[0];
    }
    return out;
}

}  // namespace

LoadedProblem load_problem(const ExperimentConfig& c, std::uint64_t seed) {
    validate_config(c);
    if (c.problem.source == "frames") return load_superres_problem(c, seed);
    LoadedProblem out;
    if (c.problem.source == "files") {
        out = load_files(c);
    } else {
        TestProblemSpec spec;
        spec.name = c.problem.name;
        spec.n = c.problem.n;
        spec.noise = parse_noise_mode(c.problem.noise);
        spec.noise_value = c.problem.noise_value;
        spec.seed = derive_seed(seed, "problem");
        spec.prolate_w = c.problem.prolate_w;
        spec.gravity_depth = c.problem.gravity_depth;
        out.problem = gen_test_problem(spec);
    }
    validate_problem(out.problem);
    if (out.problem.rows() % c.sampling.blocks != 0) {
        throw InvalidArgument("sampling.blocks: " + std::to_string(c.sampling.blocks) + " does not divide m = " +
                              std::to_string(out.problem.rows()));
    }
    out.plan = make_block_partition(out.problem.rows(), c.sampling.blocks,
                                    parse_sampling_strategy(c.sampling.strategy), derive_seed(seed, "sampling"));
    return out;
}

GeneratedFrames make_config_frames(const ExperimentConfig& c, std::uint64_t seed) {
    validate_config(c);
    const Index n = c.superres.n;
    GeneratedFrames out;
    if (c.superres.image.empty()) {
        out.image = synthetic_moon(n);
    } else {
        const GrayImage img = read_pgm(c.superres.image);
        if (img.width != n || img.height != n) {
            throw InvalidArgument("superres.image: expected a " + std::to_string(n) + "x" + std::to_string(n) +
                                  " image");
        }
        out.image = img.pixels / static_cast<double>(img.maxval);
    }
    FrameOptions fo;
    fo.n = n;
    fo.ell = c.superres.ell;
    fo.frames = c.superres.frames;
    fo.max_shift = c.superres.max_shift;
    fo.max_angle = c.superres.max_angle;
    fo.noise_level = c.superres.noise_level;
    fo.seed = derive_seed(seed, "frames");
    out.frames = gen_frames(out.image, fo);
    return out;
}

LoadedProblem load_superres_problem(const ExperimentConfig& c, std::uint64_t seed) {
    validate_config(c);
    FrameSet frames;
    std::optional<Vector> x_true;
    if (c.problem.source == "frames") {
        frames = read_frame_directory(c.problem.path, c.superres.n);
    } else {
        GeneratedFrames gen = make_config_frames(c, seed);
        frames = std::move(gen.frames);
        x_true = std::move(gen.image);
    }
    FrameProblem fp = make_frame_problem(frames, std::move(x_true));
    LoadedProblem out;
    out.problem = std::move(fp.problem);
    out.plan = std::move(fp.plan);
    out.plan.strategy = parse_sampling_strategy(c.sampling.strategy);
    out.plan.seed = derive_seed(seed, "sampling");
    out.image_side = c.superres.n;
    return out;
}

SolverOptions make_solver_options(const ExperimentConfig& c) {
    SolverOptions o;
    o.method = parse_method(c.solver.method);
    o.rrls_lambda = c.regparam.lambda;
    o.memory = c.solver.memory;
    o.lsqr.tol = c.solver.lsqr_tol;
    o.lsqr.max_iterations = c.solver.lsqr_maxit;
    return o;
}

SelectorOptions make_selector_options(const ExperimentConfig& c, std::uint64_t seed) {
    SelectorOptions o;
    o.sigma2 = c.regparam.sigma2;
    o.gamma = c.regparam.gamma;
    o.grid.min = c.regparam.grid_min;
    o.grid.max = c.regparam.grid_max;
    o.grid.points = static_cast<int>(c.regparam.grid_points);
    o.grid.refine_iterations = static_cast<int>(c.regparam.grid_refine);
    o.trace = parse_trace_mode(c.regparam.trace);
    o.probes = static_cast<int>(c.regparam.probes);
    o.probe_seed = derive_seed(seed, "probes");
    return o;
}

std::unique_ptr<IncrementPolicy> make_policy(const ExperimentConfig& c, Index blocks, std::uint64_t seed) {
    if (parse_method(c.solver.method) == Method::rrls) return nullptr;
    const SelectionMethod method = parse_selection_method(c.regparam.method);
    if (method == SelectionMethod::fixed) {
        return std::make_unique<FixedIncrement>(c.regparam.lambda / static_cast<double>(blocks));
    }
    return std::make_unique<SelectorPolicy>(method, make_selector_options(c, seed), c.regparam.initial);
}

ExperimentResult run_loaded(const ExperimentConfig& c, const LoadedProblem& loaded, std::uint64_t seed) {
    const auto policy = make_policy(c, loaded.plan.blocks, seed);
    RunOptions ro;
    ro.epochs = static_cast<std::uint64_t>(c.run.epochs);
    ExperimentResult out;
    out.run = run(loaded.problem, loaded.plan, make_solver_options(c), policy.get(), ro);
    if (!out.run.records.empty()) {
        out.final_relerr = out.run.records.back().relerr;
        out.final_lambda_eff = out.run.records.back().lambda_eff;
    } else if (loaded.problem.x_true) {
        out.final_relerr = relative_error(out.run.x, *loaded.problem.x_true);
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
    return run_loaded(c, load_problem(c, c.run.seed), c.run.seed);
}

std::uint64_t replicate_seed(std::uint64_t seed, long r) {
    return r == 0 ? seed : derive_seed(seed, "replicate:" + std::to_string(r));
}

int worker_threads(long jobs) {
    long cap = static_cast<long>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("STIK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) cap = v;
    }
    return static_cast<int>(std::max(1L, std::min(cap, jobs)));
}

std::vector<ReplicateRecords> run_replicates(const ExperimentConfig& c, std::vector<ReplicateSummary>* summaries) {
    validate_config(c);
    const long count = c.run.replicates;
    std::vector<ReplicateRecords> runs(static_cast<std::size_t>(count));
    std::vector<ReplicateSummary> sums(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<long> next{0};

    auto worker = [&] {
        for (long r = next++; r < count; r = next++) {
            const auto i = static_cast<std::size_t>(r);
            try {
                const std::uint64_t seed = replicate_seed(c.run.seed, r);
                ExperimentResult res = run_loaded(c, load_problem(c, seed), seed);
                runs[i].replicate = r;
                runs[i].records = std::move(res.run.records);
                sums[i] = {r, res.final_relerr, res.final_lambda_eff};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = worker_threads(count);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    if (summaries) *summaries = std::move(sums);
    return runs;
}

ParamSelection select_param(const ExperimentConfig& c, SelectionMethod method, std::uint64_t steps) {
    const LoadedProblem loaded = load_problem(c, c.run.seed);
    const SolverOptions opts = make_solver_options(c);
    if (opts.method == Method::rrls) throw InvalidArgument("solver.method: select-param needs an sTik-family method");

    SolverState state = init_state(loaded.problem, opts);
    SampleSchedule schedule(loaded.plan);
    const auto policy = make_policy(c, loaded.plan.blocks, c.run.seed);
    auto block_of = [&](std::uint64_t k) {
        const auto tau = schedule.block(k);
        const auto& rows = loaded.plan.partition[static_cast<std::size_t>(tau)];
        return std::make_pair(row_block(loaded.problem.A, rows), gather(loaded.problem.b, rows));
    };
    for (std::uint64_t k = 1; k <= steps; ++k) {
        auto [block, b] = block_of(k);
        const TrialStep trial(state, loaded.problem, block, b);
        const auto choice = policy->choose(trial, k, loaded.plan.blocks);
        step(state, loaded.problem, block, b, choice.increment);
    }
    const std::uint64_t k = steps + 1;
    auto [block, b] = block_of(k);
    const TrialStep trial(state, loaded.problem, block, b);
    const SelectorContext ctx(trial, make_selector_options(c, c.run.seed), k);
    ParamSelection out;
    out.k = k;
    out.tau = schedule.block(k);
    out.result = method == SelectionMethod::sdp ? sdp_select(ctx) : select_lambda(method, ctx);
    return out;
}

std::vector<ToyPoint> toy_figure(std::uint64_t seed, long epochs, double lambda) {
    if (epochs < 0) throw InvalidArgument("toy-figure: epochs must be >= 0");
    if (!(lambda > 0.0)) throw InvalidArgument("toy-figure: lambda must be > 0");
    const InverseProblem problem = toy2d(derive_seed(seed, "problem"));
    const Index blocks = problem.rows();
    const SamplePlan plan = make_block_partition(problem.rows(), blocks, SamplingStrategy::random_replacement,
                                                 derive_seed(seed, "sampling"));
    std::vector<ToyPoint> points;
    RunOptions ro;
    ro.epochs = static_cast<std::uint64_t>(epochs);

    for (const Method method : {Method::rrls, Method::stik}) {
        const std::string series(to_string(method));
        points.push_back({series, 0, lambda, 0.0, 0.0});
        ro.observer = [&](const IterationRecord& rec, const SolverState& state) {
            if (rec.k % static_cast<std::uint64_t>(blocks) != 0) return;
            const auto epoch = static_cast<long>(rec.k / static_cast<std::uint64_t>(blocks));
            points.push_back({series, epoch, rec.lambda_eff, state.x[0], state.x[1]});
        };
        SolverOptions so;
        so.method = method;
        so.rrls_lambda = lambda;
        FixedIncrement fixed(lambda / static_cast<double>(blocks));
        run(problem, plan, so, &fixed, ro);
    }

    for (int i = 0; i <= 40; ++i) {
        const double l = std::pow(10.0, -3.0 + 6.0 * i / 40.0);
        const Vector x = tikhonov_direct(problem, l);
        points.push_back({"tikhonov", 0, l, x[0], x[1]});
    }
    const Vector x0 = tikhonov_direct(problem, 0.0);
    points.push_back({"reference", 0, 0.0, x0[0], x0[1]});
    const Vector xl = tikhonov_direct(problem, lambda);
    points.push_back({"reference", 0, lambda, xl[0], xl[1]});
    return points;
}

void write_toy_csv(std::ostream& out, const std::vector<ToyPoint>& points) {
    out << "series,epoch,lambda,x1,x2\n";
    for (const auto& p : points) {
        out << p.series << ',' << p.epoch << ',' << format_double(p.lambda) << ',' << format_double(p.x1) << ','
            << format_double(p.x2) << '\n';
    }
}

}  // namespace stik
