#pragma once

// Sampled Tikhonov iterations.
//
//   rrls     y_k = y_{k-1} - B_k A_k^T (A_k y_{k-1} - b_k),
//            B_k = (lambda L^T L + sum_i A_i^T A_i)^{-1}
//   sTik     x_k = x_{k-1} - B_k (A_k^T (A_k x_{k-1} - b_k) + Lambda_k L^T L x_{k-1}),
//            B_k = (lambda_k L^T L + sum_i A_i^T A_i)^{-1},  lambda_k = sum_i Lambda_i
//   sg       same update, B_k = (lambda_k L^T L + I)^{-1}
//   sbK      same update, B_k = (lambda_k L^T L + A_k^T A_k)^{-1}
//   slimTik  x_k = x_{k-1} - s_k, s_k the least-squares solution of
//            [M_k; A_k; sqrt(lambda_k) L] s = [0; A_k x_{k-1} - b_k; Lambda_k/sqrt(lambda_k) L x_{k-1}]
//            where M_k stacks the previous r blocks.
//
// Here A_k is the block visited at step k. rrls and sTik keep the full n x n
// curvature and its Cholesky factor; the other three never form an n x n
// matrix.

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "stik/linops.hpp"
#include "stik/lsqr.hpp"
#include "stik/sampling.hpp"

namespace stik {

struct InverseProblem {
    OperatorPtr A;
    Vector b;
    OperatorPtr L;
    std::optional<Vector> x_true;
    std::optional<double> sigma2;

    Index rows() const { return A->rows(); }
    Index cols() const { return A->cols(); }
};

/// Dimension checks; with `check_definite` also verifies L^T L > 0 on the dense Gram.
void validate_problem(const InverseProblem& problem, bool check_definite = false);

/// x(lambda) = (A^T A + lambda L^T L)^{-1} A^T b by dense Cholesky.
/// lambda = 0 requires A to have full column rank (SingularSystem otherwise).
Vector tikhonov_direct(const InverseProblem& problem, double lambda);

enum class Method { rrls, stik, sg, sbk, slimtik };
enum class CurvatureMode { full, gradient, block, memory };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);
CurvatureMode curvature_mode(Method m);
std::string_view to_string(CurvatureMode m);

struct SolverOptions {
    Method method = Method::stik;
    /// Fixed lambda of rrls; must be > 0 for rrls, ignored otherwise.
    double rrls_lambda = 0.0;
    /// slimTik memory r (number of previous blocks kept).
    Index memory = 0;
    LsqrOptions lsqr;
    /// Initial iterate; zero when unset.
    std::optional<Vector> x0;
    /// Refresh the full-mode factor with rank-one updates when a block has
    /// at most this many rows and the regularization weight is unchanged.
    Index rank_update_max_rows = 32;
};

using BlockPtr = std::shared_ptr<const RowBlockView>;

struct SolverState {
    Method method = Method::stik;
    CurvatureMode mode = CurvatureMode::full;
    std::uint64_t k = 0;
    Vector x;
    /// lambda_k = sum of the accepted increments (the fixed lambda for rrls).
    double lambda_cum = 0.0;

    // Full mode: H = lambda_cum * LtL + gram and its Cholesky factor.
    DenseMatrix LtL;
    DenseMatrix gram;
    DenseMatrix H;
    Eigen::LLT<Eigen::MatrixXd> factor;
    Vector rhs_accum;

    // Memory mode: the most recent blocks, oldest first.
    std::deque<BlockPtr> memory;
    Index memory_limit = 0;

    LsqrOptions lsqr;
    Index rank_update_max_rows = 32;
};

SolverState init_state(const InverseProblem& problem, const SolverOptions& options);

void rrls_step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
               const Vector& b_block);

/// Throws RejectedIncrement when lambda_cum + increment <= 0.
void stik_step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
               const Vector& b_block, double increment);

/// sg, sbK or slimTik according to state.method.
void variant_step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
                  const Vector& b_block, double increment);

/// Dispatches on state.method; `increment` is ignored for rrls.
void step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
          const Vector& b_block, double increment);

/// The step at one block evaluated for trial values of lambda_k without
/// touching the solver state. x_k(lambda) is the iterate the method would
/// produce with cumulative parameter lambda; the influence map is
/// v -> A_k B_k(lambda) A_k^T v, whose trace enters sUPRE and sGCV.
class TrialStep {
public:
    TrialStep(const SolverState& state, const InverseProblem& problem, BlockPtr block,
              Vector b_block);

    class Point {
    public:
        double lambda_total() const noexcept { return lambda_; }
        Vector iterate() const;
        Vector influence(const Vector& v) const;
        /// Explicit ell x ell influence matrix (ell solves in limited modes).
        DenseMatrix influence_matrix() const;

    private:
        friend class TrialStep;
        const TrialStep* owner_ = nullptr;
        double lambda_ = 0.0;
        double mu_ = 0.0;
        bool use_spectral_ = false;
        std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
        std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> window_factor_;
    };

    /// Throws RejectedIncrement unless lambda_total is admissible (> 0; >= 0 for sg).
    Point at(double lambda_total) const;

    double lambda_prev() const noexcept { return state_->lambda_cum; }
    const BlockPtr& block() const noexcept { return block_; }
    const Vector& b_block() const noexcept { return b_block_; }
    Index block_rows() const noexcept { return block_->rows(); }
    const SolverState& state() const noexcept { return *state_; }
    const InverseProblem& problem() const noexcept { return *problem_; }

private:
    // Full mode with L = alpha I: gram_k = Q diag(d) Q^T, computed on first use.
    struct Spectral {
        Eigen::VectorXd d;
        Eigen::MatrixXd q;
        Eigen::VectorXd qt_rhs;
        Eigen::MatrixXd qt_at;
    };
    const Spectral& spectral() const;

    Vector lsqr_step(double lambda_total) const;
    Vector lsqr_influence(const Vector& v, double lambda_total) const;
    OperatorPtr stacked_operator(double lambda_total) const;

    const SolverState* state_;
    const InverseProblem* problem_;
    BlockPtr block_;
    Vector b_block_;
    double l_alpha_ = 0.0;  // L = l_alpha * I when > 0
    // Full mode: accumulated Gram and right-hand side including this block.
    DenseMatrix gram_k_;
    Vector rhs_k_;
    DenseMatrix block_dense_;
    // sbK with L a multiple of I: A_k A_k^T.
    DenseMatrix outer_;
    // slimTik with L a multiple of I: W = [memory blocks; A_k] as explicit
    // rows, W W^T, and the row offset of A_k inside W.
    Eigen::SparseMatrix<double> window_;
    Eigen::SparseMatrix<double> window_gram_;
    Index window_offset_ = 0;
    mutable std::once_flag spectral_once_;
    mutable std::unique_ptr<Spectral> spectral_;
};

/// Chooses Lambda_k before each sTik-family step.
class IncrementPolicy {
public:
    struct Choice {
        double increment = 0.0;
        std::string flag;
    };

    virtual ~IncrementPolicy() = default;
    virtual Choice choose(const TrialStep& trial, std::uint64_t k, Index blocks) = 0;
};

/// Lambda_k = value for every k.
class FixedIncrement final : public IncrementPolicy {
public:
    explicit FixedIncrement(double value) : value_(value) {}
    Choice choose(const TrialStep&, std::uint64_t, Index) override { return {value_, {}}; }

private:
    double value_;
};

struct IterationRecord {
    std::uint64_t k = 0;
    Index tau = 0;  // 0-based block index
    double increment = 0.0;
    double lambda_eff = 0.0;  // (M/k) * lambda_k
    double res2 = 0.0;        // |A_tau x_k - b_tau|^2
    std::optional<double> relerr;
    double seconds = 0.0;
    std::string flag;
};

struct RunOptions {
    std::uint64_t epochs = 1;
    /// Called after every step; used for per-epoch snapshots.
    std::function<void(const IterationRecord&, const SolverState&)> observer;
};

struct RunResult {
    std::vector<IterationRecord> records;
    Vector x;
    SolverState state;
    std::vector<std::string> warnings;
};

/// Drives `epochs * M` steps of the configured method along the plan's schedule.
/// `policy` is required for the sTik family and ignored for rrls. Increments
/// that would leave lambda_k <= 0 are clipped to lambda_k = 1e-12 * lambda_{k-1}
/// and flagged "clipped".
RunResult run(const InverseProblem& problem, const SamplePlan& plan, const SolverOptions& options,
              IncrementPolicy* policy, const RunOptions& run_options);

}  // namespace stik
