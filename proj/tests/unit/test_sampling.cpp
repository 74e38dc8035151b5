#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stik/errors.hpp"
#include "stik/sampling.hpp"

using namespace stik;

namespace {

std::vector<Index> sorted(std::vector<Index> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<Index> iota(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

}  // namespace

TEST(Partition, ConsecutiveBlocksOfTen) {
    const SamplePlan plan = make_block_partition(100, 10);
    ASSERT_EQ(plan.partition.size(), 10u);
    EXPECT_EQ(plan.ell, 10);
    for (Index j = 0; j < 10; ++j) {
        const auto& blk = plan.partition[static_cast<std::size_t>(j)];
        ASSERT_EQ(blk.size(), 10u);
        for (Index i = 0; i < 10; ++i) EXPECT_EQ(blk[static_cast<std::size_t>(i)], j * 10 + i);
    }
}

TEST(Partition, SingletonBlocks) {
    const SamplePlan plan = make_block_partition(4, 4);
    for (Index j = 0; j < 4; ++j) EXPECT_EQ(plan.partition[static_cast<std::size_t>(j)], std::vector<Index>{j});
}

TEST(Partition, IndivisibleThrows) {
    EXPECT_THROW(make_block_partition(6, 4), InvalidArgument);
    EXPECT_THROW(make_block_partition(6, 0), InvalidArgument);
}

TEST(Partition, LiteralPlanIsValidated) {
    EXPECT_NO_THROW(make_plan(4, {{3, 0}, {1, 2}}));
    EXPECT_THROW(make_plan(4, {{0, 1}, {1, 2}}), InvalidArgument);
    EXPECT_THROW(make_plan(4, {{0, 1}, {2}}), InvalidArgument);
    EXPECT_THROW(make_plan(4, {{0, 1}, {2, 4}}), InvalidArgument);
}

TEST(Partition, DisjointCover) {
    const SamplePlan plan = make_block_partition(60, 6);
    std::vector<Index> all;
    for (const auto& b : plan.partition) all.insert(all.end(), b.begin(), b.end());
    EXPECT_EQ(sorted(all), iota(60));
}

TEST(Schedule, CyclicIsModular) {
    SampleSchedule s(SamplingStrategy::cyclic, 3, 0);
    EXPECT_EQ(s.materialize(6), (std::vector<Index>{0, 1, 2, 0, 1, 2}));
}

TEST(Schedule, RandomCyclicWindowsArePermutations) {
    SampleSchedule s(SamplingStrategy::random_cyclic, 5, 42);
    const auto seq = s.materialize(50);
    for (std::size_t e = 0; e < 10; ++e) {
        std::vector<Index> window(seq.begin() + static_cast<long>(5 * e), seq.begin() + static_cast<long>(5 * e + 5));
        EXPECT_EQ(sorted(window), iota(5)) << "epoch " << e;
    }
}

TEST(Schedule, ZeroIndexRejected) {
    SampleSchedule s(SamplingStrategy::cyclic, 3, 0);
    EXPECT_THROW(s.block(0), InvalidArgument);
}

TEST(Schedule, ReplacementFrequenciesAreUniform) {
    const int draws = 100000;
    SampleSchedule s(SamplingStrategy::random_replacement, 4, 7);
    std::vector<int> counts(4, 0);
    for (int k = 1; k <= draws; ++k) ++counts[static_cast<std::size_t>(s.block(static_cast<std::uint64_t>(k)))];
    const double sd = std::sqrt(draws * 0.25 * 0.75);
    for (int c : counts) EXPECT_LT(std::abs(c - draws * 0.25), 3 * sd);
}

TEST(Schedule, RowInclusionFrequencyIsOneOverM) {
    // Index form of E[W W^T] = I/M: row 13 lies in block 1 of a 5-block partition of 50 rows.
    const SamplePlan plan = make_block_partition(50, 5);
    const int draws = 100000;
    for (SamplingStrategy strat : {SamplingStrategy::random_cyclic, SamplingStrategy::random_replacement}) {
        SampleSchedule s(strat, plan.blocks, 11);
        int hits = 0;
        for (int k = 1; k <= draws; ++k) {
            const auto& blk = plan.partition[static_cast<std::size_t>(s.block(static_cast<std::uint64_t>(k)))];
            if (std::find(blk.begin(), blk.end(), Index{13}) != blk.end()) ++hits;
        }
        const double sd = std::sqrt(draws * 0.2 * 0.8);
        EXPECT_LT(std::abs(hits - draws * 0.2), 3 * sd) << to_string(strat);
    }
}

TEST(Schedule, SameSeedSameSequence) {
    for (SamplingStrategy strat : {SamplingStrategy::random_cyclic, SamplingStrategy::random_replacement}) {
        SampleSchedule a(strat, 7, 99);
        SampleSchedule b(strat, 7, 99);
        SampleSchedule c(strat, 7, 100);
        const auto sa = a.materialize(200);
        EXPECT_EQ(sa, b.materialize(200));
        EXPECT_NE(sa, c.materialize(200));
    }
}

TEST(Schedule, LazyAccessMatchesMaterialize) {
    SampleSchedule a(SamplingStrategy::random_cyclic, 6, 3);
    SampleSchedule b(SamplingStrategy::random_cyclic, 6, 3);
    const auto seq = a.materialize(30);
    EXPECT_EQ(b.block(25), seq[24]);
    EXPECT_EQ(b.block(2), seq[1]);
}

TEST(Schedule, StrategyNamesRoundTrip) {
    for (SamplingStrategy s :
         {SamplingStrategy::cyclic, SamplingStrategy::random_cyclic, SamplingStrategy::random_replacement})
        EXPECT_EQ(parse_sampling_strategy(to_string(s)), s);
    EXPECT_THROW(parse_sampling_strategy("shuffle"), InvalidArgument);
}

TEST(Rng, DeriveSeedSeparatesLabels) {
    EXPECT_NE(derive_seed(1, "sampling"), derive_seed(1, "noise"));
    EXPECT_EQ(derive_seed(1, "sampling"), derive_seed(1, "sampling"));
}

TEST(Rng, NormalMoments) {
    Rng rng(5);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}
