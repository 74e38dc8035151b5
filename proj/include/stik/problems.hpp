#pragma once

// Test problems used in the experiments: three Fredholm first-kind
// discretizations (gravity, shaw, baart), the prolate Toeplitz matrix, and a
// 10x2 toy problem. See docs/test_problems.md for the kernels.

#include <cstdint>
#include <string>
#include <string_view>

#include "stik/solvers.hpp"

namespace stik {

enum class NoiseMode { none, level, variance };

struct TestProblemSpec {
    std::string name = "gravity";  // gravity | shaw | baart | prolate | toy2d
    Index n = 100;
    NoiseMode noise = NoiseMode::none;
    /// Relative noise level |e|/|A x_true| (level) or sigma^2 (variance).
    double noise_value = 0.0;
    std::uint64_t seed = 0;
    /// Bandwidth parameter of prolate.
    double prolate_w = 0.25;
    /// Depth parameter of gravity.
    double gravity_depth = 0.25;
};

struct DenseTestProblem {
    DenseMatrix A;
    Vector x_true;
};

DenseTestProblem gravity(Index n, double depth = 0.25);
DenseTestProblem shaw(Index n);
DenseTestProblem baart(Index n);
/// Symmetric Toeplitz, first row a_0 = 2w, a_k = sin(2 pi w k)/(pi k); x_true = 1.
DenseTestProblem prolate(Index n, double w = 0.25);

/// A = [1 delta_A; 0 1] (10 x 2), b = A 1 + delta_b, delta_A ~ N(0, 0.005 I_9),
/// delta_b ~ N(0, 0.1 I_10), both drawn from `seed`.
InverseProblem toy2d(std::uint64_t seed);

/// Dense A, L = I, clean b = A x_true, then noise per spec. Throws
/// InvalidArgument for an unknown name or n < 2.
InverseProblem gen_test_problem(const TestProblemSpec& spec);

struct NoisyData {
    Vector b;
    double sigma2 = 0.0;
};

/// Gaussian white noise. Level mode scales e so |e|/|b_clean| = value and
/// reports sigma^2 = |e|^2/m; variance mode draws e ~ N(0, value I).
NoisyData add_noise(const Vector& b_clean, NoiseMode mode, double value, std::uint64_t seed);

NoiseMode parse_noise_mode(std::string_view name);
std::string_view to_string(NoiseMode mode);

/// |x - x_true| / |x_true|; throws InvalidArgument for x_true = 0.
double relative_error(const Vector& x, const Vector& x_true);

}  // namespace stik
