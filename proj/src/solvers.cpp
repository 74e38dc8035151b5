#include "stik/solvers.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "stik/errors.hpp"
#include "stik/problems.hpp"

namespace stik {

namespace {

using Chol = Eigen::LLT<Eigen::MatrixXd>;
using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseLdlt = Eigen::SimplicialLDLT<SparseMatrix>;

// Rows of a block as a sparse matrix; matrix-free parents are read one row
// at a time through the adjoint.
SparseMatrix sparse_rows(const RowBlockView& blk) {
    if (blk.parent()->kind() == OperatorKind::dense) return blk.to_dense().sparseView();
    std::vector<Eigen::Triplet<double>> entries;
    Vector e = Vector::Zero(blk.rows());
    for (Index i = 0; i < blk.rows(); ++i) {
        e[i] = 1.0;
        const Vector row = blk.apply_adjoint(e);
        e[i] = 0.0;
        for (Index j = 0; j < row.size(); ++j)
            if (row[j] != 0.0) entries.emplace_back(i, j, row[j]);
    }
    SparseMatrix out(blk.rows(), blk.cols());
    out.setFromTriplets(entries.begin(), entries.end());
    return out;
}

void require_same_cols(const InverseProblem& p) {
    if (!p.A || !p.L) throw InvalidArgument("problem: A and L must be set");
    if (p.L->cols() != p.A->cols()) {
        throw InvalidArgument("problem: L has " + std::to_string(p.L->cols()) +
                              " columns, A has " + std::to_string(p.A->cols()));
    }
}

bool admissible(Method method, double lambda_total) {
    return method == Method::sg ? lambda_total >= 0.0 : lambda_total > 0.0;
}

void check_increment(const SolverState& state, double increment) {
    const double total = state.lambda_cum + increment;
    if (!admissible(state.method, total) || !std::isfinite(total)) {
        throw RejectedIncrement("step " + std::to_string(state.k + 1) +
                                    ": increment would make the cumulative parameter " +
                                    std::to_string(total),
                                state.lambda_cum, increment);
    }
}

void check_block(const SolverState& state, const BlockPtr& block, const Vector& b_block) {
    if (!block) throw InvalidArgument("step: null block");
    if (block->cols() != state.x.size()) throw InvalidArgument("step: block column count mismatch");
    if (b_block.size() != block->rows()) {
        throw InvalidArgument("step: data block has length " + std::to_string(b_block.size()) +
                              ", block has " + std::to_string(block->rows()) + " rows");
    }
}

void refactor(SolverState& state) {
    state.factor.compute(state.H);
    if (state.factor.info() != Eigen::Success) {
        throw NumericalBreakdown("Cholesky factorization of the curvature failed at step " +
                                 std::to_string(state.k + 1));
    }
}

template <class Error>
[[noreturn]] void rethrow_at(const Error& e, std::uint64_t k) {
    throw Error("step " + std::to_string(k) + ": " + e.what());
}

}  // namespace

// ---------------------------------------------------------------------------

void validate_problem(const InverseProblem& problem, bool check_definite) {
    require_same_cols(problem);
    if (problem.b.size() != problem.A->rows()) {
        throw InvalidArgument("problem: b has length " + std::to_string(problem.b.size()) +
                              ", A has " + std::to_string(problem.A->rows()) + " rows");
    }
    if (problem.x_true && problem.x_true->size() != problem.A->cols()) {
        throw InvalidArgument("problem: x_true length does not match A");
    }
    if (problem.sigma2 && !(*problem.sigma2 >= 0.0)) {
        throw InvalidArgument("problem: sigma2 must be non-negative");
    }
    if (check_definite) {
        const DenseMatrix l = problem.L->to_dense();
        const Eigen::MatrixXd ltl = l.transpose() * l;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ltl, Eigen::EigenvaluesOnly);
        if (!(eig.eigenvalues().minCoeff() > 0.0)) {
            throw InvalidArgument("problem: L^T L is not positive definite (L lacks full column rank)");
        }
    }
}

Vector tikhonov_direct(const InverseProblem& problem, double lambda) {
    validate_problem(problem);
    if (!(lambda >= 0.0)) throw InvalidArgument("tikhonov_direct: lambda must be >= 0");
    const DenseMatrix a = problem.A->to_dense();
    if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < a.cols()) {
            throw SingularSystem("tikhonov_direct: lambda = 0 with rank-deficient A (rank " +
                                 std::to_string(qr.rank()) + " < " + std::to_string(a.cols()) + ")");
        }
    }
    Eigen::MatrixXd h = a.transpose() * a;
    if (lambda > 0.0) {
        const DenseMatrix l = problem.L->to_dense();
        h.noalias() += lambda * (l.transpose() * l);
    }
    Chol chol(h);
    if (chol.info() != Eigen::Success) {
        throw SingularSystem("tikhonov_direct: normal equations are not positive definite");
    }
    return chol.solve(a.transpose() * problem.b);
}

std::string_view to_string(Method m) {
    switch (m) {
    case Method::rrls: return "rrls";
    case Method::stik: return "stik";
    case Method::sg: return "sg";
    case Method::sbk: return "sbk";
    case Method::slimtik: return "slimtik";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "rrls") return Method::rrls;
    if (name == "stik" || name == "sTik") return Method::stik;
    if (name == "sg") return Method::sg;
    if (name == "sbk" || name == "sbK") return Method::sbk;
    if (name == "slimtik" || name == "slimTik") return Method::slimtik;
    throw InvalidArgument("unknown method '" + std::string(name) +
                          "' (expected rrls, stik, sg, sbk or slimtik)");
}

CurvatureMode curvature_mode(Method m) {
    switch (m) {
    case Method::rrls:
    case Method::stik: return CurvatureMode::full;
    case Method::sg: return CurvatureMode::gradient;
    case Method::sbk: return CurvatureMode::block;
    case Method::slimtik: return CurvatureMode::memory;
    }
    return CurvatureMode::full;
}

std::string_view to_string(CurvatureMode m) {
    switch (m) {
    case CurvatureMode::full: return "full";
    case CurvatureMode::gradient: return "gradient";
    case CurvatureMode::block: return "block";
    case CurvatureMode::memory: return "memory";
    }
    return "unknown";
}

SolverState init_state(const InverseProblem& problem, const SolverOptions& options) {
    validate_problem(problem);
    const Index n = problem.cols();
    SolverState state;
    state.method = options.method;
    state.mode = curvature_mode(options.method);
    state.lsqr = options.lsqr;
    state.rank_update_max_rows = options.rank_update_max_rows;
    state.memory_limit = options.method == Method::slimtik ? options.memory : 0;
    if (state.memory_limit < 0) throw InvalidArgument("slimtik memory must be >= 0");

    if (options.x0) {
        if (options.x0->size() != n) throw InvalidArgument("initial iterate has the wrong length");
        state.x = *options.x0;
    } else {
        state.x = Vector::Zero(n);
    }

    if (state.mode == CurvatureMode::full) {
        const DenseMatrix l = problem.L->to_dense();
        state.LtL = l.transpose() * l;
        state.gram = DenseMatrix::Zero(n, n);
        state.rhs_accum = Vector::Zero(n);
        if (options.method == Method::rrls) {
            if (!(options.rrls_lambda > 0.0)) throw InvalidArgument("rrls needs lambda > 0");
            state.lambda_cum = options.rrls_lambda;
            state.H = state.lambda_cum * state.LtL;
            refactor(state);
        } else {
            state.H = DenseMatrix::Zero(n, n);
        }
    }
    return state;
}

void rrls_step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
               const Vector& b_block) {
    (void)problem;
    if (state.method != Method::rrls) throw InvalidArgument("rrls_step: state is not an rrls state");
    check_block(state, block, b_block);

    const DenseMatrix d = block->to_dense();
    const DenseMatrix dtd = d.transpose() * d;
    state.gram += dtd;
    state.rhs_accum += d.transpose() * b_block;
    state.H += dtd;
    if (d.rows() <= state.rank_update_max_rows) {
        for (Index i = 0; i < d.rows(); ++i) {
            const Eigen::VectorXd row = d.row(i).transpose();
            state.factor.rankUpdate(row, 1.0);
        }
        if (state.factor.info() != Eigen::Success) refactor(state);
    } else {
        refactor(state);
    }

    const Vector residual = d * state.x - b_block;
    state.x -= state.factor.solve(Eigen::VectorXd(d.transpose() * residual));
    ++state.k;
}

void stik_step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
               const Vector& b_block, double increment) {
    (void)problem;
    if (state.method != Method::stik) throw InvalidArgument("stik_step: state is not an sTik state");
    check_block(state, block, b_block);
    check_increment(state, increment);

    const DenseMatrix d = block->to_dense();
    const Vector gradient =
        d.transpose() * (d * state.x - b_block) + increment * (state.LtL * state.x);

    const DenseMatrix dtd = d.transpose() * d;
    state.gram += dtd;
    state.rhs_accum += d.transpose() * b_block;
    state.lambda_cum += increment;
    const bool first = state.k == 0;
    if (!first && increment == 0.0 && d.rows() <= state.rank_update_max_rows) {
        state.H += dtd;
        for (Index i = 0; i < d.rows(); ++i) {
            const Eigen::VectorXd row = d.row(i).transpose();
            state.factor.rankUpdate(row, 1.0);
        }
        if (state.factor.info() != Eigen::Success) refactor(state);
    } else {
        state.H = state.lambda_cum * state.LtL + state.gram;
        refactor(state);
    }
    state.x -= state.factor.solve(Eigen::VectorXd(gradient));
    ++state.k;
}

void variant_step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
                  const Vector& b_block, double increment) {
    if (state.mode == CurvatureMode::full) {
        throw InvalidArgument("variant_step: expects an sg, sbk or slimtik state");
    }
    check_block(state, block, b_block);
    check_increment(state, increment);

    const double total = state.lambda_cum + increment;
    Vector next = TrialStep(state, problem, block, b_block).at(total).iterate();

    state.x = std::move(next);
    state.lambda_cum = total;
    if (state.mode == CurvatureMode::memory && state.memory_limit > 0) {
        state.memory.push_back(block);
        while (static_cast<Index>(state.memory.size()) > state.memory_limit) state.memory.pop_front();
    }
    ++state.k;
}

void step(SolverState& state, const InverseProblem& problem, const BlockPtr& block,
          const Vector& b_block, double increment) {
    switch (state.method) {
    case Method::rrls: rrls_step(state, problem, block, b_block); return;
    case Method::stik: stik_step(state, problem, block, b_block, increment); return;
    case Method::sg:
    case Method::sbk:
    case Method::slimtik: variant_step(state, problem, block, b_block, increment); return;
    }
}

// ---------------------------------------------------------------------------

TrialStep::TrialStep(const SolverState& state, const InverseProblem& problem, BlockPtr block,
                     Vector b_block)
    : state_(&state), problem_(&problem), block_(std::move(block)), b_block_(std::move(b_block)) {
    check_block(state, block_, b_block_);
    if (state.method == Method::rrls) {
        throw InvalidArgument("trial steps are defined for the sTik family only");
    }
    double alpha = 0.0;
    if (is_scaled_identity(*problem.L, &alpha)) l_alpha_ = alpha;

    if (state.mode == CurvatureMode::full) {
        block_dense_ = block_->to_dense();
        gram_k_ = state.gram + block_dense_.transpose() * block_dense_;
        rhs_k_ = state.rhs_accum + block_dense_.transpose() * b_block_;
    } else if (state.mode == CurvatureMode::block && l_alpha_ > 0.0) {
        const Index ell = block_->rows();
        if (block_->parent()->kind() == OperatorKind::dense) {
            const DenseMatrix d = block_->to_dense();
            outer_ = d * d.transpose();
        } else {
            outer_.resize(ell, ell);
            Vector e = Vector::Zero(ell);
            for (Index j = 0; j < ell; ++j) {
                e[j] = 1.0;
                outer_.col(j) = block_->apply(block_->apply_adjoint(e));
                e[j] = 0.0;
            }
            outer_ = 0.5 * (outer_ + outer_.transpose()).eval();
        }
    } else if (state.mode == CurvatureMode::memory && l_alpha_ > 0.0) {
        std::vector<SparseMatrix> parts;
        Index rows = 0;
        for (const auto& m : state.memory) {
            parts.push_back(sparse_rows(*m));
            rows += m->rows();
        }
        window_offset_ = rows;
        parts.push_back(sparse_rows(*block_));
        rows += block_->rows();
        std::vector<Eigen::Triplet<double>> entries;
        Index offset = 0;
        for (const auto& part : parts) {
            for (Index j = 0; j < part.outerSize(); ++j)
                for (SparseMatrix::InnerIterator it(part, j); it; ++it)
                    entries.emplace_back(offset + it.row(), it.col(), it.value());
            offset += part.rows();
        }
        window_.resize(rows, block_->cols());
        window_.setFromTriplets(entries.begin(), entries.end());
        window_gram_ = (window_ * window_.transpose()).pruned();
    }
}

TrialStep::Point TrialStep::at(double lambda_total) const {
    if (!admissible(state_->method, lambda_total) || !std::isfinite(lambda_total)) {
        throw RejectedIncrement("trial step: cumulative parameter " + std::to_string(lambda_total) +
                                    " is not admissible",
                                state_->lambda_cum, lambda_total - state_->lambda_cum);
    }
    Point p;
    p.owner_ = this;
    p.lambda_ = lambda_total;
    if (state_->mode == CurvatureMode::full && l_alpha_ > 0.0) {
        const Spectral& sp = spectral();
        p.use_spectral_ = true;
        p.mu_ = lambda_total * l_alpha_ * l_alpha_;
        if (!(sp.d.minCoeff() + p.mu_ > 0.0)) {
            throw NumericalBreakdown("trial step: curvature is singular at lambda = " +
                                     std::to_string(lambda_total));
        }
    } else if (state_->mode == CurvatureMode::full) {
        auto chol = std::make_shared<Chol>(Eigen::MatrixXd(lambda_total * state_->LtL + gram_k_));
        if (chol->info() != Eigen::Success) {
            throw NumericalBreakdown("trial step: curvature is not positive definite at lambda = " +
                                     std::to_string(lambda_total));
        }
        p.factor_ = std::move(chol);
    } else if (state_->mode == CurvatureMode::block && l_alpha_ > 0.0) {
        const double mu = lambda_total * l_alpha_ * l_alpha_;
        Eigen::MatrixXd k = outer_;
        k.diagonal().array() += mu;
        auto chol = std::make_shared<Chol>(k);
        if (chol->info() != Eigen::Success) {
            throw NumericalBreakdown("trial step: block system is not positive definite at lambda = " +
                                     std::to_string(lambda_total));
        }
        p.factor_ = std::move(chol);
    } else if (state_->mode == CurvatureMode::memory && l_alpha_ > 0.0) {
        SparseMatrix k = window_gram_;
        const double mu = lambda_total * l_alpha_ * l_alpha_;
        for (Index i = 0; i < k.rows(); ++i) k.coeffRef(i, i) += mu;
        auto ldlt = std::make_shared<SparseLdlt>(k);
        if (ldlt->info() != Eigen::Success) {
            throw NumericalBreakdown("trial step: window system is not positive definite at lambda = " +
                                     std::to_string(lambda_total));
        }
        p.window_factor_ = std::move(ldlt);
    }
    return p;
}

const TrialStep::Spectral& TrialStep::spectral() const {
    std::call_once(spectral_once_, [this] {
        const Eigen::MatrixXd gram = gram_k_;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) {
            throw NumericalBreakdown("trial step: eigendecomposition of the Gram matrix failed");
        }
        auto sp = std::make_unique<Spectral>();
        // The Gram matrix is semidefinite; negative eigenvalues are rounding.
        sp->d = eig.eigenvalues().cwiseMax(0.0);
        sp->q = eig.eigenvectors();
        sp->qt_rhs = sp->q.transpose() * rhs_k_;
        sp->qt_at = sp->q.transpose() * block_dense_.transpose();
        spectral_ = std::move(sp);
    });
    return *spectral_;
}

OperatorPtr TrialStep::stacked_operator(double lambda_total) const {
    const auto& L = problem_->L;
    if (state_->mode == CurvatureMode::gradient) {
        return make_stacked({make_scaled(std::sqrt(lambda_total), L), make_identity(L->cols())});
    }
    std::vector<OperatorPtr> parts;
    if (state_->mode == CurvatureMode::memory) {
        for (const auto& m : state_->memory) parts.push_back(m);
    }
    parts.push_back(block_);
    parts.push_back(make_scaled(std::sqrt(lambda_total), L));
    return make_stacked(std::move(parts));
}

Vector TrialStep::lsqr_step(double lambda_total) const {
    const auto& L = *problem_->L;
    const Vector& x = state_->x;
    const double increment = lambda_total - state_->lambda_cum;
    const OperatorPtr op = stacked_operator(lambda_total);
    Vector rhs = Vector::Zero(op->rows());
    if (state_->mode == CurvatureMode::gradient) {
        const Vector g = block_->apply_adjoint(block_->apply(x) - b_block_) +
                         increment * L.apply_adjoint(L.apply(x));
        rhs.tail(g.size()) = g;
    } else {
        Index offset = 0;
        if (state_->mode == CurvatureMode::memory) {
            for (const auto& m : state_->memory) offset += m->rows();
        }
        rhs.segment(offset, block_->rows()) = block_->apply(x) - b_block_;
        rhs.tail(L.rows()) = (increment / std::sqrt(lambda_total)) * L.apply(x);
    }
    return lsqr_solve(*op, rhs, state_->lsqr.tol, state_->lsqr.max_iterations);
}

Vector TrialStep::lsqr_influence(const Vector& v, double lambda_total) const {
    const OperatorPtr op = stacked_operator(lambda_total);
    Vector rhs = Vector::Zero(op->rows());
    if (state_->mode == CurvatureMode::gradient) {
        const Vector atv = block_->apply_adjoint(v);
        rhs.tail(atv.size()) = atv;
    } else {
        Index offset = 0;
        if (state_->mode == CurvatureMode::memory) {
            for (const auto& m : state_->memory) offset += m->rows();
        }
        rhs.segment(offset, block_->rows()) = v;
    }
    return block_->apply(lsqr_solve(*op, rhs, state_->lsqr.tol, state_->lsqr.max_iterations));
}

Vector TrialStep::Point::iterate() const {
    const TrialStep& t = *owner_;
    const SolverState& s = *t.state_;
    switch (s.mode) {
    case CurvatureMode::full:
        if (use_spectral_) {
            const Spectral& sp = *t.spectral_;
            return sp.q * (sp.qt_rhs.array() / (sp.d.array() + mu_)).matrix();
        }
        return factor_->solve(Eigen::VectorXd(t.rhs_k_));
    case CurvatureMode::gradient:
        if (t.l_alpha_ > 0.0) {
            const double a2 = t.l_alpha_ * t.l_alpha_;
            const double increment = lambda_ - s.lambda_cum;
            const Vector g = t.block_->apply_adjoint(t.block_->apply(s.x) - t.b_block_) +
                             (increment * a2) * s.x;
            return s.x - g / (lambda_ * a2 + 1.0);
        }
        return s.x - t.lsqr_step(lambda_);
    case CurvatureMode::block:
        if (t.l_alpha_ > 0.0) {
            // Row-space form: z = (lambda_{k-1}/lambda_k) x, then
            // x_k = z + A_k^T (mu I + A_k A_k^T)^{-1} (b_k - A_k z).
            const Vector z = (s.lambda_cum / lambda_) * s.x;
            const Vector coef = factor_->solve(Eigen::VectorXd(t.b_block_ - t.block_->apply(z)));
            return z + t.block_->apply_adjoint(coef);
        }
        return s.x - t.lsqr_step(lambda_);
    case CurvatureMode::memory:
        if (t.l_alpha_ > 0.0) {
            // Same row-space form over W = [memory; A_k], targets [A_mem x; b_k].
            const Vector z = (s.lambda_cum / lambda_) * s.x;
            Vector d = t.window_ * s.x;
            d.segment(t.window_offset_, t.block_->rows()) = t.b_block_;
            const Vector coef = window_factor_->solve(Eigen::VectorXd(d - t.window_ * z));
            return z + t.window_.transpose() * coef;
        }
        return s.x - t.lsqr_step(lambda_);
    }
    return s.x;
}

Vector TrialStep::Point::influence(const Vector& v) const {
    const TrialStep& t = *owner_;
    const SolverState& s = *t.state_;
    if (v.size() != t.block_->rows()) throw InvalidArgument("influence: vector length mismatch");
    switch (s.mode) {
    case CurvatureMode::full:
        if (use_spectral_) {
            const Spectral& sp = *t.spectral_;
            const Eigen::VectorXd w = (sp.qt_at * v).array() / (sp.d.array() + mu_);
            return sp.qt_at.transpose() * w;
        }
        return t.block_dense_ *
               factor_->solve(Eigen::VectorXd(t.block_dense_.transpose() * v));
    case CurvatureMode::gradient:
        if (t.l_alpha_ > 0.0) {
            return t.block_->apply(t.block_->apply_adjoint(v)) /
                   (lambda_ * t.l_alpha_ * t.l_alpha_ + 1.0);
        }
        return t.lsqr_influence(v, lambda_);
    case CurvatureMode::block:
        if (t.l_alpha_ > 0.0) return t.outer_ * factor_->solve(v);
        return t.lsqr_influence(v, lambda_);
    case CurvatureMode::memory:
        if (t.l_alpha_ > 0.0) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(t.window_gram_.rows());
            e.segment(t.window_offset_, v.size()) = v;
            const Eigen::VectorXd y = t.window_gram_ * window_factor_->solve(e);
            return y.segment(t.window_offset_, v.size());
        }
        return t.lsqr_influence(v, lambda_);
    }
    return v;
}

DenseMatrix TrialStep::Point::influence_matrix() const {
    const TrialStep& t = *owner_;
    const SolverState& s = *t.state_;
    if (s.mode == CurvatureMode::full && use_spectral_) {
        const Spectral& sp = *t.spectral_;
        const Eigen::VectorXd inv = (sp.d.array() + mu_).inverse();
        return sp.qt_at.transpose() * inv.asDiagonal() * sp.qt_at;
    }
    if (s.mode == CurvatureMode::full) {
        const Eigen::MatrixXd dt = t.block_dense_.transpose();
        return t.block_dense_ * factor_->solve(dt);
    }
    if (s.mode == CurvatureMode::block && t.l_alpha_ > 0.0) {
        return t.outer_ * factor_->solve(Eigen::MatrixXd::Identity(t.outer_.rows(), t.outer_.cols()));
    }
    const Index ell = t.block_->rows();
    DenseMatrix out(ell, ell);
    Vector e = Vector::Zero(ell);
    for (Index j = 0; j < ell; ++j) {
        e[j] = 1.0;
        out.col(j) = influence(e);
        e[j] = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------

RunResult run(const InverseProblem& problem, const SamplePlan& plan, const SolverOptions& options,
              IncrementPolicy* policy, const RunOptions& run_options) {
    validate_problem(problem);
    validate_plan(plan);
    if (plan.m != problem.rows()) {
        throw InvalidArgument("run: plan covers " + std::to_string(plan.m) + " rows, A has " +
                              std::to_string(problem.rows()));
    }
    if (options.method != Method::rrls && policy == nullptr) {
        throw InvalidArgument("run: the sTik family needs an increment policy");
    }

    RunResult result;
    result.state = init_state(problem, options);
    SolverState& state = result.state;

    if (options.method == Method::rrls && options.x0 && options.x0->norm() != 0.0 &&
        plan.strategy != SamplingStrategy::random_replacement) {
        result.warnings.emplace_back(
            "rrls with a nonzero initial iterate: epoch iterates are not x(lambda/j)");
    }

    std::vector<BlockPtr> blocks(static_cast<std::size_t>(plan.blocks));
    std::vector<Vector> b_blocks(static_cast<std::size_t>(plan.blocks));
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        blocks[j] = row_block(problem.A, plan.partition[j]);
        b_blocks[j] = gather(problem.b, plan.partition[j]);
    }

    SampleSchedule schedule(plan);
    const std::uint64_t steps = run_options.epochs * static_cast<std::uint64_t>(plan.blocks);
    result.records.reserve(steps);

    for (std::uint64_t k = 1; k <= steps; ++k) {
        const auto tau = static_cast<std::size_t>(schedule.block(k));
        const BlockPtr& block = blocks[tau];
        const Vector& b_block = b_blocks[tau];

        IterationRecord rec;
        rec.k = k;
        rec.tau = static_cast<Index>(tau);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (options.method == Method::rrls) {
                rrls_step(state, problem, block, b_block);
            } else {
                const TrialStep trial(state, problem, block, b_block);
                IncrementPolicy::Choice choice = policy->choose(trial, k, plan.blocks);
                double increment = choice.increment;
                if (!(state.lambda_cum + increment > 0.0) || !std::isfinite(increment)) {
                    const double target = state.lambda_cum > 0.0 ? 1e-12 * state.lambda_cum : 1e-12;
                    increment = target - state.lambda_cum;
                    choice.flag = choice.flag.empty() ? "clipped" : choice.flag + "|clipped";
                }
                step(state, problem, block, b_block, increment);
                rec.increment = increment;
                rec.flag = std::move(choice.flag);
            }
        } catch (const MaxIterationsExceeded& e) {
            throw MaxIterationsExceeded("step " + std::to_string(k) + ": " + e.what(),
                                        e.best_iterate(), e.iterations());
        } catch (const RejectedIncrement& e) {
            throw RejectedIncrement("step " + std::to_string(k) + ": " + e.what(), e.lambda_prev(),
                                    e.increment());
        } catch (const SelectionFailed& e) {
            rethrow_at(e, k);
        } catch (const SingularSystem& e) {
            rethrow_at(e, k);
        } catch (const NumericalBreakdown& e) {
            rethrow_at(e, k);
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.lambda_eff = static_cast<double>(plan.blocks) * state.lambda_cum / static_cast<double>(k);
        rec.res2 = (block->apply(state.x) - b_block).squaredNorm();
        if (problem.x_true) rec.relerr = relative_error(state.x, *problem.x_true);
        if (run_options.observer) run_options.observer(rec, state);
        result.records.push_back(std::move(rec));
    }
    result.x = state.x;
    return result;
}

}  // namespace stik
