#pragma once

// Seeded, platform-independent random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard <random> distributions are implementation-defined,
// so every distribution used here is written out explicitly; the same seed
// gives the same draws with any conforming compiler and library.

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace stik {

/// Mixes a parent seed with a fixed label (e.g. "sampling", "noise", "probes").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform on {0, ..., n-1}; unbiased (rejection on the top bits).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal via the Marsaglia polar method.
    double normal();

    /// +1 or -1 with equal probability.
    double rademacher() { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

    Eigen::VectorXd normal_vector(Eigen::Index n);
    Eigen::VectorXd rademacher_vector(Eigen::Index n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace stik
