#include "stik/sampling.hpp"

#include <numeric>

#include "stik/errors.hpp"

namespace stik {

std::string_view to_string(SamplingStrategy s) {
    switch (s) {
    case SamplingStrategy::cyclic: return "cyclic";
    case SamplingStrategy::random_cyclic: return "random_cyclic";
    case SamplingStrategy::random_replacement: return "random_replacement";
    }
    return "unknown";
}

SamplingStrategy parse_sampling_strategy(std::string_view name) {
    if (name == "cyclic") return SamplingStrategy::cyclic;
    if (name == "random_cyclic") return SamplingStrategy::random_cyclic;
    if (name == "random_replacement") return SamplingStrategy::random_replacement;
    throw InvalidArgument("unknown sampling strategy '" + std::string(name) +
                          "' (expected cyclic, random_cyclic or random_replacement)");
}

SamplePlan make_block_partition(Index m, Index blocks, SamplingStrategy strategy,
                                std::uint64_t seed) {
    if (m <= 0 || blocks <= 0) throw InvalidArgument("block partition: m and M must be positive");
    if (m % blocks != 0) {
        throw InvalidArgument("block partition: M = " + std::to_string(blocks) +
                              " does not divide m = " + std::to_string(m));
    }
    SamplePlan plan;
    plan.m = m;
    plan.blocks = blocks;
    plan.ell = m / blocks;
    plan.strategy = strategy;
    plan.seed = seed;
    plan.partition.resize(static_cast<std::size_t>(blocks));
    for (Index j = 0; j < blocks; ++j) {
        auto& rows = plan.partition[static_cast<std::size_t>(j)];
        rows.resize(static_cast<std::size_t>(plan.ell));
        std::iota(rows.begin(), rows.end(), j * plan.ell);
    }
    return plan;
}

SamplePlan make_plan(Index m, std::vector<std::vector<Index>> partition, SamplingStrategy strategy,
                     std::uint64_t seed) {
    SamplePlan plan;
    plan.m = m;
    plan.blocks = static_cast<Index>(partition.size());
    plan.ell = partition.empty() ? 0 : static_cast<Index>(partition.front().size());
    plan.partition = std::move(partition);
    plan.strategy = strategy;
    plan.seed = seed;
    validate_plan(plan);
    return plan;
}

void validate_plan(const SamplePlan& plan) {
    if (plan.blocks <= 0 || plan.partition.size() != static_cast<std::size_t>(plan.blocks)) {
        throw InvalidArgument("sample plan: block count does not match partition");
    }
    if (plan.ell <= 0 || plan.ell * plan.blocks != plan.m) {
        throw InvalidArgument("sample plan: need m = M * ell with ell > 0");
    }
    std::vector<char> seen(static_cast<std::size_t>(plan.m), 0);
    for (const auto& rows : plan.partition) {
        if (static_cast<Index>(rows.size()) != plan.ell) {
            throw InvalidArgument("sample plan: blocks must all have " + std::to_string(plan.ell) +
                                  " rows");
        }
        for (Index r : rows) {
            if (r < 0 || r >= plan.m) throw InvalidArgument("sample plan: row index out of range");
            auto& s = seen[static_cast<std::size_t>(r)];
            if (s) throw InvalidArgument("sample plan: row " + std::to_string(r) + " is in two blocks");
            s = 1;
        }
    }
    // m*ell entries with no repeats inside [0, m) is already a cover.
}

SampleSchedule::SampleSchedule(SamplingStrategy strategy, Index blocks, std::uint64_t seed)
    : strategy_(strategy), blocks_(blocks), rng_(seed) {
    if (blocks <= 0) throw InvalidArgument("schedule: need M > 0");
}

SampleSchedule::SampleSchedule(const SamplePlan& plan)
    : SampleSchedule(plan.strategy, plan.blocks, plan.seed) {}

Index SampleSchedule::block(std::uint64_t k) {
    if (k == 0) throw InvalidArgument("schedule: iteration index starts at 1");
    extend_to(k);
    return drawn_[k - 1];
}

std::vector<Index> SampleSchedule::materialize(std::uint64_t horizon) {
    if (horizon == 0) return {};
    extend_to(horizon);
    return {drawn_.begin(), drawn_.begin() + static_cast<std::ptrdiff_t>(horizon)};
}

void SampleSchedule::extend_to(std::uint64_t k) {
    const auto m = static_cast<std::uint64_t>(blocks_);
    while (drawn_.size() < k) {
        switch (strategy_) {
        case SamplingStrategy::cyclic:
            drawn_.push_back(static_cast<Index>(drawn_.size() % m));
            break;
        case SamplingStrategy::random_replacement:
            drawn_.push_back(static_cast<Index>(rng_.uniform_index(m)));
            break;
        case SamplingStrategy::random_cyclic: {
            // A fresh Fisher-Yates permutation per epoch.
            std::vector<Index> perm(static_cast<std::size_t>(m));
            std::iota(perm.begin(), perm.end(), Index{0});
            for (std::uint64_t i = m - 1; i > 0; --i) {
                const auto j = rng_.uniform_index(i + 1);
                std::swap(perm[i], perm[j]);
            }
            drawn_.insert(drawn_.end(), perm.begin(), perm.end());
            break;
        }
        }
    }
}

}  // namespace stik
