#include "stik/lsqr.hpp"

#include <cmath>
#include <string>

#include "stik/errors.hpp"

namespace stik {

namespace {

double normal_residual(const LinearOperator& op, const Vector& x, const Vector& rhs) {
    return op.apply_adjoint(op.apply(x) - rhs).norm();
}

}  // namespace

LsqrResult lsqr(const LinearOperator& op, const Vector& rhs, const LsqrOptions& options) {
    if (rhs.size() != op.rows()) {
        throw InvalidArgument("lsqr: right-hand side has length " + std::to_string(rhs.size()) +
                              ", operator has " + std::to_string(op.rows()) + " rows");
    }
    if (!(options.tol > 0.0)) throw InvalidArgument("lsqr: tol must be positive");
    const Index maxit = options.max_iterations > 0 ? options.max_iterations : 2 * op.cols();

    LsqrResult result;
    result.x = Vector::Zero(op.cols());

    double beta = rhs.norm();
    if (beta == 0.0) {
        result.converged = true;
        return result;
    }
    Vector u = rhs / beta;
    Vector v = op.apply_adjoint(u);
    double alpha = v.norm();
    if (alpha == 0.0) {
        // rhs is orthogonal to range(A); x = 0 solves the normal equations.
        result.converged = true;
        return result;
    }
    v /= alpha;

    const double arnorm0 = alpha * beta;
    Vector w = v;
    double phibar = beta;
    double rhobar = alpha;

    for (Index it = 1; it <= maxit; ++it) {
        u = op.apply(v) - alpha * u;
        beta = u.norm();
        if (beta > 0.0) u /= beta;

        v = op.apply_adjoint(u) - beta * v;
        alpha = v.norm();
        if (alpha > 0.0) v /= alpha;

        const double rho = std::hypot(rhobar, beta);
        const double c = rhobar / rho;
        const double s = beta / rho;
        const double theta = s * alpha;
        rhobar = -c * alpha;
        const double phi = c * phibar;
        phibar = s * phibar;

        result.x += (phi / rho) * w;
        w = v - (theta / rho) * w;
        result.iterations = it;

        // Recurrence estimate of |A^T r|; confirm against the true value
        // before stopping since the recurrence drifts at tight tolerances.
        const double arnorm_est = phibar * alpha * std::abs(c);
        if (arnorm_est <= options.tol * arnorm0 || alpha == 0.0 || beta == 0.0) {
            const double actual = normal_residual(op, result.x, rhs) / arnorm0;
            if (actual <= options.tol || alpha == 0.0) {
                result.converged = actual <= options.tol;
                result.normal_residual = actual;
                if (alpha == 0.0) result.converged = true;
                return result;
            }
        }
    }
    result.normal_residual = normal_residual(op, result.x, rhs) / arnorm0;
    result.converged = result.normal_residual <= options.tol;
    return result;
}

Vector lsqr_solve(const LinearOperator& op, const Vector& rhs, double tol, Index max_iterations) {
    LsqrResult r = lsqr(op, rhs, LsqrOptions{tol, max_iterations});
    if (!r.converged) {
        throw MaxIterationsExceeded("lsqr: no convergence after " + std::to_string(r.iterations) +
                                        " iterations (normal residual ratio " +
                                        std::to_string(r.normal_residual) + ")",
                                    std::move(r.x), static_cast<long>(r.iterations));
    }
    return std::move(r.x);
}

}  // namespace stik
