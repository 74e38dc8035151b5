#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stik/config.hpp"
#include "stik/errors.hpp"
#include "stik/experiments.hpp"
#include "stik/problems.hpp"
#include "stik/records.hpp"
#include "stik/textio.hpp"

using namespace stik;
namespace fs = std::filesystem;

namespace {

ExperimentConfig gravity_config(long n, long blocks) {
    ExperimentConfig c;
    c.problem.name = "gravity";
    c.problem.n = n;
    c.sampling.blocks = blocks;
    c.run.seed = 12;
    return c;
}

std::string csv_of(const std::vector<IterationRecord>& recs, bool timing = false) {
    std::ostringstream os;
    write_records_csv(os, recs, timing);
    return os.str();
}

long count_lines(const std::string& s) { return static_cast<long>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

// --- config ------------------------------------------------------------------

TEST(Config, ParseSerializeRoundTrip) {
    std::istringstream in(R"(
# comment
[problem]
name = prolate
n = 60
noise = variance
noise_value = 0.01

[sampling]
blocks = 6        ; trailing comment
strategy = random_cyclic

[solver]
method = slimtik
memory = 2

[regparam]
method = sgcv
initial = 0.1
sigma2 = 0.01
grid.min = 1e-6
grid.points = 25
trace = hutchinson
probes = 3

[run]
epochs = 4
seed = 18446744073709551615
)");
    const ExperimentConfig c = parse_config(in);
    EXPECT_EQ(c.problem.name, "prolate");
    EXPECT_EQ(c.sampling.strategy, "random_cyclic");
    EXPECT_EQ(c.solver.memory, 2);
    ASSERT_TRUE(c.regparam.initial.has_value());
    EXPECT_EQ(*c.regparam.initial, 0.1);
    EXPECT_EQ(c.regparam.grid_min, 1e-6);
    EXPECT_EQ(c.run.seed, 18446744073709551615ull);
    std::istringstream again(serialize_config(c));
    EXPECT_EQ(parse_config(again), c);
    std::istringstream defaults(serialize_config(ExperimentConfig{}));
    EXPECT_EQ(parse_config(defaults), ExperimentConfig{});
}

TEST(Config, UnknownKeyAndSectionRejected) {
    std::istringstream a("[solver]\nmethd = stik\n");
    EXPECT_THROW(parse_config(a), InvalidArgument);
    std::istringstream b("[solvers]\nmethod = stik\n");
    EXPECT_THROW(parse_config(b), InvalidArgument);
    ExperimentConfig c;
    EXPECT_THROW(apply_override(c, "run.epoch=3"), InvalidArgument);
    EXPECT_THROW(apply_override(c, "run.epochs"), InvalidArgument);
    apply_override(c, "run.epochs=3");
    EXPECT_EQ(c.run.epochs, 3);
}

TEST(Config, ValidationNamesTheField) {
    ExperimentConfig c;
    c.regparam.method = "lcurve";
    try {
        validate_config(c);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("regparam.method"), std::string::npos);
    }
    c = ExperimentConfig{};
    c.sampling.blocks = 7;
    EXPECT_THROW(validate_config(c), InvalidArgument);
    c = ExperimentConfig{};
    EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, MalformedValueReportsLine) {
    std::istringstream in("[run]\nepochs = three\n");
    try {
        parse_config(in, "x.ini");
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("x.ini:2"), std::string::npos) << e.what();
    }
}

TEST(Config, ShippedExamplesLoadAndValidate) {
    const fs::path dir = fs::path(STIK_TEST_DATA_DIR) / "configs";
    int count = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".ini") continue;
        const ExperimentConfig cfg = load_config(entry.path());
        EXPECT_NO_THROW(validate_config(cfg)) << entry.path();
        std::istringstream text(serialize_config(cfg));
        EXPECT_EQ(parse_config(text), cfg) << entry.path();
        ++count;
    }
    EXPECT_GE(count, 4);
}

TEST(Config, EveryKeyIsSettable) {
    const ExperimentConfig defaults;
    const std::string text = serialize_config(defaults);
    for (const std::string& key : config_keys()) EXPECT_NE(text.find(key.substr(key.find('.') + 1)), std::string::npos) << key;
}

// --- experiment runs -------------------------------------------------------------

TEST(Experiment, FixedOneEpochMatchesDirectTikhonov) {
    ExperimentConfig c = gravity_config(100, 10);
    c.regparam.lambda = 0.02;
    const ExperimentResult res = run_experiment(c);
    ASSERT_EQ(res.run.records.size(), 10u);
    const LoadedProblem lp = load_problem(c, c.run.seed);
    const double direct = relative_error(tikhonov_direct(lp.problem, 0.02), *lp.problem.x_true);
    ASSERT_TRUE(res.final_relerr.has_value());
    EXPECT_NEAR(*res.final_relerr, direct, 1e-8);
    EXPECT_DOUBLE_EQ(res.final_lambda_eff, 0.02);
}

TEST(Experiment, CsvIsByteIdenticalAcrossRuns) {
    ExperimentConfig c = gravity_config(40, 4);
    c.regparam.method = "sgcv";
    c.regparam.trace = "hutchinson";
    c.sampling.strategy = "random_replacement";
    c.run.epochs = 2;
    const std::string a = csv_of(run_experiment(c).run.records);
    const std::string b = csv_of(run_experiment(c).run.records);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.substr(0, a.find('\n')), "k,tau,Lambda,lambda_eff,res2,relerr,seconds");
    EXPECT_EQ(count_lines(a), 9);
}

TEST(Experiment, ZeroEpochsWritesHeaderOnly) {
    ExperimentConfig c = gravity_config(20, 4);
    c.run.epochs = 0;
    EXPECT_EQ(csv_of(run_experiment(c).run.records), "k,tau,Lambda,lambda_eff,res2,relerr,seconds\n");
}

TEST(Experiment, EveryMethodRuns) {
    for (const char* m : {"rrls", "stik", "sg", "sbk", "slimtik"}) {
        ExperimentConfig c = gravity_config(30, 3);
        c.solver.method = m;
        c.solver.memory = 1;
        const ExperimentResult r = run_experiment(c);
        EXPECT_EQ(r.run.records.size(), 3u) << m;
        EXPECT_TRUE(r.run.x.allFinite()) << m;
    }
}

TEST(Experiment, FilesSourceMatchesGenerated) {
    ExperimentConfig c = gravity_config(30, 3);
    const LoadedProblem gen = load_problem(c, c.run.seed);
    const fs::path dir = fs::temp_directory_path() / "stik_test_harness_files";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_matrix(dir / "A.txt", gen.problem.A->to_dense());
    write_vector(dir / "b.txt", gen.problem.b);
    write_vector(dir / "x_true.txt", *gen.problem.x_true);
    ExperimentConfig f = c;
    f.problem.source = "files";
    f.problem.path = dir.string();
    EXPECT_EQ(csv_of(run_experiment(f).run.records), csv_of(run_experiment(c).run.records));
}

TEST(Experiment, ReplicatesAreIndependentAndOrdered) {
    ExperimentConfig c = gravity_config(20, 4);
    c.sampling.strategy = "random_cyclic";
    c.regparam.method = "sgcv";
    c.run.replicates = 3;
    std::vector<ReplicateSummary> sums;
    const auto runs = run_replicates(c, &sums);
    ASSERT_EQ(runs.size(), 3u);
    ASSERT_EQ(sums.size(), 3u);
    for (long r = 0; r < 3; ++r) {
        EXPECT_EQ(runs[static_cast<std::size_t>(r)].replicate, r);
        EXPECT_EQ(sums[static_cast<std::size_t>(r)].replicate, r);
    }
    // Replicate 0 is the plain run; the others use derived seeds.
    ExperimentConfig single = c;
    single.run.replicates = 1;
    EXPECT_EQ(csv_of(runs[0].records), csv_of(run_experiment(single).run.records));
    EXPECT_NE(csv_of(runs[1].records), csv_of(runs[2].records));

    std::ostringstream merged;
    write_replicates_csv(merged, runs, false);
    EXPECT_EQ(merged.str().substr(0, merged.str().find('\n')), "replicate,k,tau,Lambda,lambda_eff,res2,relerr,seconds");
    EXPECT_EQ(count_lines(merged.str()), 1 + 3 * 4);
    // Thread count does not change results.
    setenv("STIK_THREADS", "1", 1);
    const auto serial = run_replicates(c);
    unsetenv("STIK_THREADS");
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(csv_of(serial[r].records), csv_of(runs[r].records));
}

TEST(Experiment, SelectParamIsDeterministic) {
    ExperimentConfig c = gravity_config(40, 4);
    c.regparam.method = "sgcv";
    const ParamSelection a = select_param(c, SelectionMethod::sgcv, 2);
    const ParamSelection b = select_param(c, SelectionMethod::sgcv, 2);
    EXPECT_EQ(a.k, 3u);
    EXPECT_EQ(a.tau, 2);
    EXPECT_EQ(a.result.increment, b.result.increment);
    EXPECT_EQ(a.result.objective, b.result.objective);
    EXPECT_EQ(a.result.method, SelectionMethod::sgcv);
    EXPECT_TRUE(std::isfinite(a.result.objective));
}

TEST(Experiment, TimingColumnOnlyWhenRequested) {
    IterationRecord r;
    r.k = 1;
    r.seconds = 0.25;
    EXPECT_NE(csv_of({r}, false).find(",0\n"), std::string::npos);
    EXPECT_NE(csv_of({r}, true).find(",0.25\n"), std::string::npos);
    // Missing relative error is an empty field.
    EXPECT_NE(csv_of({r}).find(",,"), std::string::npos);
}

TEST(Experiment, SuperresDeskRunImproves) {
    ExperimentConfig c;
    c.superres.n = 32;
    c.superres.ell = 8;
    c.superres.frames = 4;
    c.sampling.blocks = 4;
    c.solver.method = "slimtik";
    c.solver.memory = 2;
    c.regparam.method = "fixed";
    c.regparam.lambda = 1e-3;
    const LoadedProblem lp = load_superres_problem(c, 1);
    EXPECT_EQ(lp.image_side, 32);
    EXPECT_EQ(lp.plan.blocks, 4);
    const ExperimentResult r = run_loaded(c, lp, 1);
    ASSERT_TRUE(r.final_relerr.has_value());
    EXPECT_LT(*r.final_relerr, 1.0);
}

TEST(Toy, FigureSeriesShapes) {
    const auto pts = toy_figure(3, 5, 0.2);
    long rrls = 0, stik_n = 0, tik = 0, ref = 0;
    for (const ToyPoint& p : pts) {
        if (p.series == "rrls") ++rrls;
        if (p.series == "stik") ++stik_n;
        if (p.series == "tikhonov") ++tik;
        if (p.series == "reference") ++ref;
    }
    EXPECT_EQ(rrls, 6);
    EXPECT_EQ(stik_n, 6);
    EXPECT_EQ(tik, 41);
    EXPECT_EQ(ref, 2);
    std::ostringstream os;
    write_toy_csv(os, pts);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "series,epoch,lambda,x1,x2");
}
