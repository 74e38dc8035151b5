#pragma once

#include "stik/linops.hpp"

namespace stik {

struct LsqrOptions {
    /// Stop once |A^T (A x - rhs)| <= tol * |A^T rhs|.
    double tol = 1e-10;
    /// 0 means 2 * cols(A).
    Index max_iterations = 0;
};

struct LsqrResult {
    Vector x;
    Index iterations = 0;
    bool converged = false;
    /// |A^T (A x - rhs)| / |A^T rhs|, recomputed from x at exit.
    double normal_residual = 0.0;
};

/// Golub-Kahan bidiagonalization least squares (Paige & Saunders), started
/// from x = 0. Never throws on non-convergence; check `converged`.
LsqrResult lsqr(const LinearOperator& op, const Vector& rhs, const LsqrOptions& options = {});

/// As lsqr(), but throws MaxIterationsExceeded (carrying the last iterate)
/// when the tolerance is not met.
Vector lsqr_solve(const LinearOperator& op, const Vector& rhs, double tol = 1e-10,
                  Index max_iterations = 0);

}  // namespace stik
