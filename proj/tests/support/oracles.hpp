#pragma once

// Dense reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include "stik/linops.hpp"
#include "stik/random.hpp"
#include "stik/solvers.hpp"

namespace stik::oracle {

inline DenseMatrix random_matrix(Index m, Index n, std::uint64_t seed) {
    Rng rng(seed);
    DenseMatrix a(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
    return a;
}

inline InverseProblem random_problem(Index m, Index n, std::uint64_t seed, double noise = 0.1) {
    Rng rng(seed);
    InverseProblem p;
    const DenseMatrix a = random_matrix(m, n, derive_seed(seed, "A"));
    const Vector x = rng.normal_vector(n);
    p.A = make_dense(a);
    p.b = a * x + noise * rng.normal_vector(m);
    p.L = make_identity(n);
    p.x_true = x;
    p.sigma2 = noise * noise;
    return p;
}

inline double rel_diff(const Vector& a, const Vector& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

/// argmin |[W_1..W_k]^T (A x - b)|^2 + lambda |L (x - x0)|^2 with the visited
/// blocks stacked row by row (repeated blocks repeat their rows).
inline Vector stacked_tikhonov(const InverseProblem& p, const SamplePlan& plan,
                               const std::vector<Index>& visited, double lambda, const Vector& x0) {
    const DenseMatrix a = p.A->to_dense();
    const DenseMatrix l = p.L->to_dense();
    Index rows = 0;
    for (Index t : visited) rows += static_cast<Index>(plan.partition[static_cast<std::size_t>(t)].size());
    DenseMatrix s(rows + l.rows(), a.cols());
    Vector rhs(rows + l.rows());
    Index r = 0;
    for (Index t : visited) {
        for (Index i : plan.partition[static_cast<std::size_t>(t)]) {
            s.row(r) = a.row(i);
            rhs[r] = p.b[i];
            ++r;
        }
    }
    const double sq = std::sqrt(lambda);
    s.bottomRows(l.rows()) = sq * l;
    rhs.tail(l.rows()) = sq * (l * x0);
    return s.colPivHouseholderQr().solve(rhs);
}

}  // namespace stik::oracle
