#include "stik/problems.hpp"

#include <cmath>
#include <numbers>

#include "stik/errors.hpp"
#include "stik/random.hpp"

namespace stik {

namespace {

constexpr double pi = std::numbers::pi;

void require_size(Index n) {
    if (n < 2) throw InvalidArgument("test problem: n must be >= 2");
}

}  // namespace

// Midpoint quadrature of K(s,t) = d (d^2 + (s-t)^2)^{-3/2} on [0,1]^2,
// f(t) = sin(pi t) + 0.5 sin(2 pi t).
DenseTestProblem gravity(Index n, double depth) {
    require_size(n);
    const double h = 1.0 / static_cast<double>(n);
    DenseTestProblem p;
    p.A.resize(n, n);
    p.x_true.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double s = h * (static_cast<double>(i) + 0.5);
        for (Index j = 0; j < n; ++j) {
            const double t = h * (static_cast<double>(j) + 0.5);
            const double dist2 = depth * depth + (s - t) * (s - t);
            p.A(i, j) = h * depth / (dist2 * std::sqrt(dist2));
        }
    }
    for (Index j = 0; j < n; ++j) {
        const double t = h * (static_cast<double>(j) + 0.5);
        p.x_true[j] = std::sin(pi * t) + 0.5 * std::sin(2.0 * pi * t);
    }
    return p;
}

// K(s,t) = (cos s + cos t)^2 (sin u / u)^2, u = pi (sin s + sin t), on
// [-pi/2, pi/2]^2 with midpoints; two-Gaussian solution.
DenseTestProblem shaw(Index n) {
    require_size(n);
    const double h = pi / static_cast<double>(n);
    Vector c(n);
    Vector u(n);
    Vector t(n);
    for (Index i = 0; i < n; ++i) {
        t[i] = -pi / 2.0 + (static_cast<double>(i) + 0.5) * h;
        c[i] = std::cos(t[i]);
        u[i] = pi * std::sin(t[i]);
    }
    DenseTestProblem p;
    p.A.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double ss = u[i] + u[j];
            const double sinc = std::abs(ss) < 1e-14 ? 1.0 : std::sin(ss) / ss;
            const double v = (c[i] + c[j]) * sinc;
            p.A(i, j) = h * v * v;
        }
    }
    p.x_true.resize(n);
    for (Index i = 0; i < n; ++i) {
        p.x_true[i] = 2.0 * std::exp(-6.0 * (t[i] - 0.8) * (t[i] - 0.8)) +
                      std::exp(-2.0 * (t[i] + 0.5) * (t[i] + 0.5));
    }
    return p;
}

// K(s,t) = exp(s cos t), s in [0, pi/2], t in [0, pi]; collocation with
// Simpson weights in s, piecewise constant in t. Solution sin(t).
DenseTestProblem baart(Index n) {
    require_size(n);
    const double hs = pi / (2.0 * static_cast<double>(n));
    const double ht = pi / static_cast<double>(n);
    const double c = 1.0 / (3.0 * std::sqrt(2.0));
    Vector ihs(n + 1);
    for (Index i = 0; i <= n; ++i) ihs[i] = static_cast<double>(i) * hs;

    auto column_integral = [&](double co) {
        Vector f(n);
        for (Index i = 0; i < n; ++i) f[i] = (std::exp(ihs[i + 1] * co) - std::exp(ihs[i] * co)) / co;
        return f;
    };

    DenseTestProblem p;
    p.A.resize(n, n);
    Vector f3(n);
    for (Index i = 0; i < n; ++i) f3[i] = std::exp(ihs[i + 1]) - std::exp(ihs[i]);
    for (Index j = 1; j <= n; ++j) {
        const Vector f1 = f3;
        const double co2 = std::cos((static_cast<double>(j) - 0.5) * ht);
        const double co3 = std::cos(static_cast<double>(j) * ht);
        const Vector f2 = column_integral(co2);
        if (std::abs(co3) < 1e-14) {
            f3 = Vector::Constant(n, hs);
        } else {
            f3 = column_integral(co3);
        }
        p.A.col(j - 1) = c * (f1 + 4.0 * f2 + f3);
    }
    p.x_true.resize(n);
    for (Index j = 0; j < n; ++j) p.x_true[j] = std::sin((static_cast<double>(j) + 0.5) * ht);
    return p;
}

DenseTestProblem prolate(Index n, double w) {
    require_size(n);
    if (!(w > 0.0 && w < 0.5)) throw InvalidArgument("prolate: w must lie in (0, 0.5)");
    Vector first(n);
    first[0] = 2.0 * w;
    for (Index k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        first[k] = std::sin(2.0 * pi * w * kk) / (pi * kk);
    }
    DenseTestProblem p;
    p.A.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) p.A(i, j) = first[std::abs(i - j)];
    }
    p.x_true = Vector::Ones(n);
    return p;
}

InverseProblem toy2d(std::uint64_t seed) {
    Rng rng_a(derive_seed(seed, "toy2d.delta_A"));
    Rng rng_b(derive_seed(seed, "toy2d.delta_b"));
    DenseMatrix a(10, 2);
    for (Index i = 0; i < 9; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = std::sqrt(0.005) * rng_a.normal();
    }
    a(9, 0) = 0.0;
    a(9, 1) = 1.0;
    const Vector x_true = Vector::Ones(2);
    Vector b = a * x_true;
    for (Index i = 0; i < 10; ++i) b[i] += std::sqrt(0.1) * rng_b.normal();

    InverseProblem p;
    p.A = make_dense(std::move(a));
    p.b = std::move(b);
    p.L = make_identity(2);
    p.x_true = x_true;
    p.sigma2 = 0.1;
    return p;
}

InverseProblem gen_test_problem(const TestProblemSpec& spec) {
    if (spec.name == "toy2d") return toy2d(spec.seed);

    DenseTestProblem dense;
    if (spec.name == "gravity") {
        dense = gravity(spec.n, spec.gravity_depth);
    } else if (spec.name == "shaw") {
        dense = shaw(spec.n);
    } else if (spec.name == "baart") {
        dense = baart(spec.n);
    } else if (spec.name == "prolate") {
        dense = prolate(spec.n, spec.prolate_w);
    } else {
        throw InvalidArgument("unknown test problem '" + spec.name +
                              "' (expected gravity, shaw, baart, prolate or toy2d)");
    }

    InverseProblem p;
    p.b = dense.A * dense.x_true;
    p.x_true = std::move(dense.x_true);
    p.A = make_dense(std::move(dense.A));
    p.L = make_identity(spec.n);
    if (spec.noise != NoiseMode::none) {
        NoisyData noisy = add_noise(p.b, spec.noise, spec.noise_value, derive_seed(spec.seed, "noise"));
        p.b = std::move(noisy.b);
        p.sigma2 = noisy.sigma2;
    }
    return p;
}

NoisyData add_noise(const Vector& b_clean, NoiseMode mode, double value, std::uint64_t seed) {
    if (mode == NoiseMode::none) return {b_clean, 0.0};
    if (!(value > 0.0) || !std::isfinite(value)) throw InvalidArgument("add_noise: value must be > 0");
    Rng rng(seed);
    Vector e = rng.normal_vector(b_clean.size());
    NoisyData out;
    if (mode == NoiseMode::level) {
        const double target = value * b_clean.norm();
        e *= target / e.norm();
        out.sigma2 = e.squaredNorm() / static_cast<double>(b_clean.size());
    } else {
        e *= std::sqrt(value);
        out.sigma2 = value;
    }
    out.b = b_clean + e;
    return out;
}

NoiseMode parse_noise_mode(std::string_view name) {
    if (name == "none") return NoiseMode::none;
    if (name == "level") return NoiseMode::level;
    if (name == "variance") return NoiseMode::variance;
    throw InvalidArgument("unknown noise mode '" + std::string(name) +
                          "' (expected none, level or variance)");
}

std::string_view to_string(NoiseMode mode) {
    switch (mode) {
    case NoiseMode::none: return "none";
    case NoiseMode::level: return "level";
    case NoiseMode::variance: return "variance";
    }
    return "unknown";
}

double relative_error(const Vector& x, const Vector& x_true) {
    if (x.size() != x_true.size()) throw InvalidArgument("relative_error: length mismatch");
    const double denom = x_true.norm();
    if (denom == 0.0) throw InvalidArgument("relative_error: x_true is zero");
    return (x - x_true).norm() / denom;
}

}  // namespace stik
