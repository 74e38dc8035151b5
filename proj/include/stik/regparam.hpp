#pragma once

// Regularization-parameter selection for the sTik family.
//
// At step k the selector picks the cumulative parameter lambda_k, searching
// over trial values of lambda_k; the increment is Lambda_k = lambda_k -
// lambda_{k-1}. For a trial value the iterate x_k(lambda) and the influence
// trace tr(A_k B_k(lambda) A_k^T) come from TrialStep.
//
//   sDP    |A_k x_k(lambda) - b_k|^2 = gamma sigma^2 ell           (bisection)
//   sUPRE  U_k = |r_k|^2 + 2 sigma^2 tr - sigma^2 ell               (minimize)
//   sGCV   G_k = ell |r_k|^2 / (ell - tr)^2                         (minimize)
//
// The public objective functions take the increment `lambda_cand`, so the
// cumulative value is lambda_cand + lambda_prev.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stik/random.hpp"
#include "stik/solvers.hpp"

namespace stik {

enum class SelectionMethod { fixed, sdp, supre, sgcv };
enum class TraceMode { exact, hutchinson };

std::string_view to_string(SelectionMethod m);
SelectionMethod parse_selection_method(std::string_view name);
std::string_view to_string(TraceMode m);
TraceMode parse_trace_mode(std::string_view name);

/// Log-spaced search grid. With `scaled`, the bounds multiply a data-norm
/// scale (see SelectorContext::grid_scale).
struct GridSpec {
    double min = 1e-8;
    double max = 1e2;
    int points = 40;
    bool scaled = true;
    /// Golden-section iterations on log(lambda) around the best interior grid point.
    int refine_iterations = 24;
};

struct SelectorOptions {
    /// Falls back to the problem's sigma2 when unset.
    std::optional<double> sigma2;
    double gamma = 4.0;
    GridSpec grid;
    TraceMode trace = TraceMode::exact;
    int probes = 1;
    std::uint64_t probe_seed = 0;
};

class SelectorContext {
public:
    /// `k` seeds the Hutchinson probes, which stay fixed across trial values.
    SelectorContext(const TrialStep& trial, SelectorOptions options, std::uint64_t k = 1);

    const TrialStep& trial() const noexcept { return *trial_; }
    const SelectorOptions& options() const noexcept { return options_; }
    double lambda_prev() const noexcept { return trial_->lambda_prev(); }
    Index ell() const noexcept { return trial_->block_rows(); }
    double sigma2() const;

    /// k * |A_k|_2^2: the data term's magnitude after k blocks.
    double grid_scale() const noexcept { return scale_; }
    /// Trial values of the cumulative parameter.
    std::vector<double> grid() const;

    struct Evaluation {
        double lambda_total = 0.0;
        Vector x;
        double res2 = 0.0;
        double trace = 0.0;
    };
    /// Solve at cumulative lambda; the trace is computed when `with_trace`.
    Evaluation evaluate(double lambda_total, bool with_trace) const;

    const std::vector<Vector>& probes() const noexcept { return probes_; }

private:
    const TrialStep* trial_;
    SelectorOptions options_;
    double scale_ = 1.0;
    std::vector<Vector> probes_;
};

struct SelectionResult {
    double increment = 0.0;     // Lambda_k
    double lambda_total = 0.0;  // lambda_{k-1} + Lambda_k
    double objective = 0.0;
    int evaluations = 0;
    SelectionMethod method = SelectionMethod::fixed;
    /// "" or "no-crossing" (sDP target outside the grid).
    std::string flag;
};

Vector candidate_solve(const SelectorContext& ctx, double lambda_cand);
double sampled_residual_sq(const SelectorContext& ctx, double lambda_cand);
double trace_term(const SelectorContext& ctx, double lambda_cand);
double supre_objective(const SelectorContext& ctx, double lambda_cand);
/// Throws UndefinedObjective when |ell - trace| < 1e-8 ell.
double sgcv_objective(const SelectorContext& ctx, double lambda_cand);
/// Leave-one-out form V_k = (1/ell) |D_k (b_k - A_k x_k)|^2, D_k = diag(1/(1 - t_jj)).
double sampled_cv_objective(const SelectorContext& ctx, double lambda_cand);

SelectionResult sdp_select(const SelectorContext& ctx);

/// Sweep of the sampled residual over the grid. It is nondecreasing in
/// lambda for the first block; with earlier blocks in the curvature the
/// block residual can dip, and bisection then returns one of the crossings.
struct ResidualAudit {
    std::vector<double> lambdas;
    std::vector<double> residuals;
    int violations = 0;
    /// Largest relative decrease between neighbouring grid points.
    double max_drop = 0.0;
};
ResidualAudit audit_residual_monotonicity(const SelectorContext& ctx);
/// sUPRE or sGCV: grid search, then golden-section refinement.
SelectionResult select_lambda(SelectionMethod method, const SelectorContext& ctx);

/// Runs sDP/sUPRE/sGCV before every step. The first step optionally uses
/// a fixed effective parameter instead.
class SelectorPolicy final : public IncrementPolicy {
public:
    SelectorPolicy(SelectionMethod method, SelectorOptions options,
                   std::optional<double> initial_lambda = std::nullopt);
    Choice choose(const TrialStep& trial, std::uint64_t k, Index blocks) override;

    const std::vector<SelectionResult>& history() const noexcept { return history_; }

private:
    SelectionMethod method_;
    SelectorOptions options_;
    std::optional<double> initial_lambda_;
    std::vector<SelectionResult> history_;
};

// --- trace estimation ------------------------------------------------------

using MatVec = std::function<Vector(const Vector&)>;

double exact_trace(const MatVec& apply, Index dim);

struct TraceEstimate {
    double mean = 0.0;
    /// Sample variance of the per-probe values (0 for one probe).
    double variance = 0.0;
    int probes = 0;
};

/// Hutchinson estimator with Rademacher probes.
TraceEstimate hutchinson_trace(const MatVec& apply, Index dim, int probes, Rng& rng);

// --- full-data counterparts -------------------------------------------------

enum class FullDataMethod { dp, upre, gcv, opt };
std::string_view to_string(FullDataMethod m);

/// Tikhonov solutions for the whole problem from one generalized SVD-type
/// factorization: with L^T L = R^T R and A R^{-1} = U S V^T,
/// x(lambda) = R^{-1} V (S / (S^2 + lambda)) U^T b.
class FullTikhonov {
public:
    explicit FullTikhonov(const InverseProblem& problem);

    Vector solve(double lambda) const;
    double residual_sq(double lambda) const;
    /// tr(A (A^T A + lambda L^T L)^{-1} A^T)
    double influence_trace(double lambda) const;
    double norm_sq() const noexcept { return s_.size() ? s_[0] * s_[0] : 0.0; }

private:
    const InverseProblem* problem_;
    DenseMatrix a_;
    Eigen::MatrixXd w_;  // R^{-1} V
    Eigen::VectorXd s_;
    Eigen::VectorXd utb_;
    double b_perp_sq_ = 0.0;  // |b|^2 - |U^T b|^2
};

struct FullDataSelection {
    double lambda = 0.0;
    double objective = 0.0;
    std::string flag;
};

/// DP/UPRE need sigma^2, opt needs x_true (InvalidArgument otherwise).
/// Grid bounds are scaled by |A|_2^2 when grid.scaled.
FullDataSelection full_data_select(FullDataMethod method, const InverseProblem& problem,
                                   const GridSpec& grid = {}, double gamma = 4.0);

}  // namespace stik
