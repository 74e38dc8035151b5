#pragma once

// Row-block partitions and the block-visiting schedules.
//
// Block indices are 0-based throughout the C++ API: tau(k) is in
// {0, ..., M-1} and k counts iterations from 1.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stik/linops.hpp"
#include "stik/random.hpp"

namespace stik {

enum class SamplingStrategy { cyclic, random_cyclic, random_replacement };

std::string_view to_string(SamplingStrategy s);
SamplingStrategy parse_sampling_strategy(std::string_view name);

struct SamplePlan {
    Index m = 0;
    Index blocks = 0;  // M
    Index ell = 0;     // rows per block
    std::vector<std::vector<Index>> partition;
    SamplingStrategy strategy = SamplingStrategy::cyclic;
    std::uint64_t seed = 0;
};

/// Contiguous equal blocks: block j holds rows [j*ell, (j+1)*ell).
SamplePlan make_block_partition(Index m, Index blocks,
                                SamplingStrategy strategy = SamplingStrategy::cyclic,
                                std::uint64_t seed = 0);

/// Uses `partition` literally after checking it is an equal-size disjoint cover of [0, m).
SamplePlan make_plan(Index m, std::vector<std::vector<Index>> partition,
                     SamplingStrategy strategy = SamplingStrategy::cyclic,
                     std::uint64_t seed = 0);

/// Throws InvalidArgument unless the plan's blocks are disjoint, equal-size and cover [0, m).
void validate_plan(const SamplePlan& plan);

/// The sequence tau(1), tau(2), ... for one plan. Draws are generated lazily
/// and cached, so block(k) is a pure function of (strategy, M, seed, k).
class SampleSchedule {
public:
    SampleSchedule(SamplingStrategy strategy, Index blocks, std::uint64_t seed);
    explicit SampleSchedule(const SamplePlan& plan);

    /// tau(k) for k >= 1. Throws InvalidArgument for k == 0.
    Index block(std::uint64_t k);

    /// tau(1..horizon).
    std::vector<Index> materialize(std::uint64_t horizon);

    SamplingStrategy strategy() const noexcept { return strategy_; }
    Index blocks() const noexcept { return blocks_; }

private:
    void extend_to(std::uint64_t k);

    SamplingStrategy strategy_;
    Index blocks_;
    Rng rng_;
    std::vector<Index> drawn_;
};

}  // namespace stik
