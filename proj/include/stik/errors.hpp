#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace stik {

/// Bad dimensions, out-of-range indices, malformed input files or configs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A factorization or solve failed on a system that should have been definite.
class NumericalBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The direct Tikhonov solve was asked for lambda = 0 with a rank-deficient A.
class SingularSystem : public NumericalBreakdown {
public:
    using NumericalBreakdown::NumericalBreakdown;
};

/// A step would make the cumulative regularization parameter non-positive.
class RejectedIncrement : public std::runtime_error {
public:
    RejectedIncrement(const std::string& what, double lambda_prev, double increment)
        : std::runtime_error(what), lambda_prev_(lambda_prev), increment_(increment) {}

    double lambda_prev() const noexcept { return lambda_prev_; }
    double increment() const noexcept { return increment_; }

private:
    double lambda_prev_;
    double increment_;
};

/// An iterative subsolver ran out of iterations; carries its best iterate.
class MaxIterationsExceeded : public std::runtime_error {
public:
    MaxIterationsExceeded(const std::string& what, Eigen::VectorXd best, long iterations)
        : std::runtime_error(what), best_(std::move(best)), iterations_(iterations) {}

    const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
    long iterations() const noexcept { return iterations_; }

private:
    Eigen::VectorXd best_;
    long iterations_;
};

/// An objective is undefined at the requested point (e.g. zero sGCV denominator).
class UndefinedObjective : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// No grid point produced a usable objective value.
class SelectionFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stik
