#include "stik/regparam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "stik/errors.hpp"

namespace stik {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::vector<double> log_grid(double lo, double hi, int points) {
    if (points < 1) throw InvalidArgument("grid: points must be >= 1");
    if (!(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("grid: need 0 < min <= max");
    if (points == 1) return {lo};
    std::vector<double> g(static_cast<std::size_t>(points));
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < points; ++i) {
        g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
    }
    g.back() = hi;
    return g;
}

struct Minimum {
    double lambda = 0.0;
    double value = inf;
    int evaluations = 0;
};

// Objective failures (undefined sGCV, LSQR trouble, rejected values) count as +inf.
template <class F>
double guarded(F& f, double lambda) {
    try {
        const double v = f(lambda);
        return std::isfinite(v) ? v : inf;
    } catch (const UndefinedObjective&) {
        return inf;
    } catch (const NumericalBreakdown&) {
        return inf;
    } catch (const MaxIterationsExceeded&) {
        return inf;
    } catch (const RejectedIncrement&) {
        return inf;
    }
}

template <class F>
Minimum minimize_on_grid(const std::vector<double>& grid, F f, int refine_iterations) {
    Minimum best;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = guarded(f, grid[i]);
        ++best.evaluations;
        if (v < best.value) {
            best.value = v;
            best.lambda = grid[i];
            best_i = i;
        }
    }
    if (!std::isfinite(best.value)) return best;
    if (best_i == 0 || best_i + 1 == grid.size() || refine_iterations <= 0) return best;

    // Golden-section search on log(lambda) inside the neighbouring grid cells.
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(grid[best_i - 1]);
    double b = std::log(grid[best_i + 1]);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = guarded(f, std::exp(c));
    double fd = guarded(f, std::exp(d));
    best.evaluations += 2;
    for (int it = 0; it < refine_iterations; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = guarded(f, std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = guarded(f, std::exp(d));
        }
        ++best.evaluations;
    }
    if (fc < best.value) {
        best.value = fc;
        best.lambda = std::exp(c);
    }
    if (fd < best.value) {
        best.value = fd;
        best.lambda = std::exp(d);
    }
    return best;
}

struct Crossing {
    double lambda = 0.0;
    double value = 0.0;
    int evaluations = 0;
    bool crossed = true;
};

// Finds residual(lambda) = target for a residual nondecreasing in lambda.
template <class F>
Crossing bisect_crossing(double lo, double hi, double target, F residual) {
    Crossing out;
    const double r_lo = residual(lo);
    ++out.evaluations;
    if (r_lo >= target || lo == hi) {
        out.lambda = lo;
        out.value = r_lo;
        out.crossed = r_lo == target;
        return out;
    }
    const double r_hi = residual(hi);
    ++out.evaluations;
    if (r_hi <= target) {
        out.lambda = hi;
        out.value = r_hi;
        out.crossed = r_hi == target;
        return out;
    }
    double a = std::log(lo);
    double b = std::log(hi);
    out.lambda = hi;
    out.value = r_hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double r = residual(std::exp(mid));
        ++out.evaluations;
        out.lambda = std::exp(mid);
        out.value = r;
        if (std::abs(r - target) <= 1e-4 * target || b - a < 1e-14) break;
        if (r < target) {
            a = mid;
        } else {
            b = mid;
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(SelectionMethod m) {
    switch (m) {
    case SelectionMethod::fixed: return "fixed";
    case SelectionMethod::sdp: return "sdp";
    case SelectionMethod::supre: return "supre";
    case SelectionMethod::sgcv: return "sgcv";
    }
    return "unknown";
}

SelectionMethod parse_selection_method(std::string_view name) {
    if (name == "fixed") return SelectionMethod::fixed;
    if (name == "sdp" || name == "sDP") return SelectionMethod::sdp;
    if (name == "supre" || name == "sUPRE") return SelectionMethod::supre;
    if (name == "sgcv" || name == "sGCV") return SelectionMethod::sgcv;
    throw InvalidArgument("unknown selection method '" + std::string(name) +
                          "' (expected fixed, sdp, supre or sgcv)");
}

std::string_view to_string(TraceMode m) {
    return m == TraceMode::exact ? "exact" : "hutchinson";
}

TraceMode parse_trace_mode(std::string_view name) {
    if (name == "exact") return TraceMode::exact;
    if (name == "hutchinson") return TraceMode::hutchinson;
    throw InvalidArgument("unknown trace mode '" + std::string(name) + "' (expected exact or hutchinson)");
}

std::string_view to_string(FullDataMethod m) {
    switch (m) {
    case FullDataMethod::dp: return "dp";
    case FullDataMethod::upre: return "upre";
    case FullDataMethod::gcv: return "gcv";
    case FullDataMethod::opt: return "opt";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

SelectorContext::SelectorContext(const TrialStep& trial, SelectorOptions options, std::uint64_t k)
    : trial_(&trial), options_(std::move(options)) {
    if (options_.trace == TraceMode::hutchinson) {
        if (options_.probes < 1) throw InvalidArgument("selector: probes must be >= 1");
        Rng rng(derive_seed(options_.probe_seed, "probes:" + std::to_string(k)));
        for (int i = 0; i < options_.probes; ++i) probes_.push_back(rng.rademacher_vector(ell()));
    }
    if (options_.grid.scaled) {
        const double norm = estimate_norm(*trial.block());
        const double steps = static_cast<double>(std::max<std::uint64_t>(k, 1));
        scale_ = norm > 0.0 ? steps * norm * norm : 1.0;
    }
}

double SelectorContext::sigma2() const {
    if (options_.sigma2) return *options_.sigma2;
    if (trial_->problem().sigma2) return *trial_->problem().sigma2;
    throw InvalidArgument("selector: sigma2 is required (set regparam.sigma2)");
}

std::vector<double> SelectorContext::grid() const {
    return log_grid(options_.grid.min * scale_, options_.grid.max * scale_, options_.grid.points);
}

SelectorContext::Evaluation SelectorContext::evaluate(double lambda_total, bool with_trace) const {
    const TrialStep::Point point = trial_->at(lambda_total);
    Evaluation e;
    e.lambda_total = lambda_total;
    e.x = point.iterate();
    e.res2 = (trial_->block()->apply(e.x) - trial_->b_block()).squaredNorm();
    if (with_trace) {
        if (options_.trace == TraceMode::exact) {
            e.trace = point.influence_matrix().trace();
        } else {
            double sum = 0.0;
            for (const Vector& v : probes_) sum += v.dot(point.influence(v));
            e.trace = sum / static_cast<double>(probes_.size());
        }
    }
    return e;
}

Vector candidate_solve(const SelectorContext& ctx, double lambda_cand) {
    return ctx.evaluate(lambda_cand + ctx.lambda_prev(), false).x;
}

double sampled_residual_sq(const SelectorContext& ctx, double lambda_cand) {
    return ctx.evaluate(lambda_cand + ctx.lambda_prev(), false).res2;
}

double trace_term(const SelectorContext& ctx, double lambda_cand) {
    return ctx.evaluate(lambda_cand + ctx.lambda_prev(), true).trace;
}

namespace {

double upre_value(const SelectorContext::Evaluation& e, double sigma2, double ell) {
    return e.res2 + 2.0 * sigma2 * e.trace - sigma2 * ell;
}

double gcv_value(const SelectorContext::Evaluation& e, double ell) {
    const double denom = ell - e.trace;
    if (std::abs(denom) < 1e-8 * ell) {
        throw UndefinedObjective("sGCV: ell - trace vanishes at lambda = " + std::to_string(e.lambda_total));
    }
    return ell * e.res2 / (denom * denom);
}

}  // namespace

double supre_objective(const SelectorContext& ctx, double lambda_cand) {
    const double s2 = ctx.sigma2();
    return upre_value(ctx.evaluate(lambda_cand + ctx.lambda_prev(), true), s2,
                      static_cast<double>(ctx.ell()));
}

double sgcv_objective(const SelectorContext& ctx, double lambda_cand) {
    return gcv_value(ctx.evaluate(lambda_cand + ctx.lambda_prev(), true), static_cast<double>(ctx.ell()));
}

double sampled_cv_objective(const SelectorContext& ctx, double lambda_cand) {
    const TrialStep::Point point = ctx.trial().at(lambda_cand + ctx.lambda_prev());
    const Vector x = point.iterate();
    const Vector r = ctx.trial().b_block() - ctx.trial().block()->apply(x);
    const DenseMatrix t = point.influence_matrix();
    double sum = 0.0;
    for (Index j = 0; j < r.size(); ++j) {
        const double d = 1.0 - t(j, j);
        if (std::abs(d) < 1e-12) throw UndefinedObjective("sampled CV: leverage equals one");
        sum += (r[j] / d) * (r[j] / d);
    }
    return sum / static_cast<double>(r.size());
}

SelectionResult sdp_select(const SelectorContext& ctx) {
    const double s2 = ctx.sigma2();
    if (!(ctx.options().gamma > 1.0)) throw InvalidArgument("sdp: gamma must be > 1");
    const double target = ctx.options().gamma * s2 * static_cast<double>(ctx.ell());
    const std::vector<double> grid = ctx.grid();
    const Crossing c = bisect_crossing(grid.front(), grid.back(), target, [&](double lambda) {
        return ctx.evaluate(lambda, false).res2;
    });
    SelectionResult out;
    out.method = SelectionMethod::sdp;
    out.lambda_total = c.lambda;
    out.increment = c.lambda - ctx.lambda_prev();
    out.objective = c.value;
    out.evaluations = c.evaluations;
    if (!c.crossed && std::abs(c.value - target) > 1e-4 * target) out.flag = "no-crossing";
    return out;
}

ResidualAudit audit_residual_monotonicity(const SelectorContext& ctx) {
    ResidualAudit out;
    out.lambdas = ctx.grid();
    for (double lambda : out.lambdas) {
        const double r = ctx.evaluate(lambda, false).res2;
        if (!out.residuals.empty() && r < out.residuals.back()) {
            ++out.violations;
            out.max_drop = std::max(out.max_drop, (out.residuals.back() - r) / out.residuals.back());
        }
        out.residuals.push_back(r);
    }
    return out;
}

SelectionResult select_lambda(SelectionMethod method, const SelectorContext& ctx) {
    if (method == SelectionMethod::sdp) return sdp_select(ctx);
    if (method == SelectionMethod::fixed) {
        throw InvalidArgument("select_lambda: 'fixed' has no objective; use a fixed increment");
    }
    const double ell = static_cast<double>(ctx.ell());
    Minimum best;
    if (method == SelectionMethod::supre) {
        const double s2 = ctx.sigma2();
        best = minimize_on_grid(
            ctx.grid(), [&](double lambda) { return upre_value(ctx.evaluate(lambda, true), s2, ell); },
            ctx.options().grid.refine_iterations);
    } else {
        best = minimize_on_grid(
            ctx.grid(), [&](double lambda) { return gcv_value(ctx.evaluate(lambda, true), ell); },
            ctx.options().grid.refine_iterations);
    }
    if (!std::isfinite(best.value)) {
        throw SelectionFailed(std::string(to_string(method)) + ": objective failed at every grid point");
    }
    SelectionResult out;
    out.method = method;
    out.lambda_total = best.lambda;
    out.increment = best.lambda - ctx.lambda_prev();
    out.objective = best.value;
    out.evaluations = best.evaluations;
    return out;
}

SelectorPolicy::SelectorPolicy(SelectionMethod method, SelectorOptions options,
                               std::optional<double> initial_lambda)
    : method_(method), options_(std::move(options)), initial_lambda_(initial_lambda) {
    if (method_ == SelectionMethod::fixed) {
        throw InvalidArgument("SelectorPolicy: use FixedIncrement for a fixed parameter");
    }
    if (initial_lambda_ && !(*initial_lambda_ > 0.0)) {
        throw InvalidArgument("SelectorPolicy: initial lambda must be > 0");
    }
}

IncrementPolicy::Choice SelectorPolicy::choose(const TrialStep& trial, std::uint64_t k, Index blocks) {
    if (k == 1 && initial_lambda_) {
        // Effective parameter (M/k) lambda_k = initial at k = 1.
        const double total = *initial_lambda_ / static_cast<double>(blocks);
        SelectionResult r;
        r.method = SelectionMethod::fixed;
        r.lambda_total = total;
        r.increment = total - trial.lambda_prev();
        history_.push_back(r);
        return {r.increment, "initial"};
    }
    const SelectorContext ctx(trial, options_, k);
    SelectionResult r = method_ == SelectionMethod::sdp ? sdp_select(ctx) : select_lambda(method_, ctx);
    history_.push_back(r);
    return {r.increment, r.flag};
}

// ---------------------------------------------------------------------------

double exact_trace(const MatVec& apply, Index dim) {
    double sum = 0.0;
    Vector e = Vector::Zero(dim);
    for (Index i = 0; i < dim; ++i) {
        e[i] = 1.0;
        sum += apply(e)[i];
        e[i] = 0.0;
    }
    return sum;
}

TraceEstimate hutchinson_trace(const MatVec& apply, Index dim, int probes, Rng& rng) {
    if (probes < 1) throw InvalidArgument("hutchinson_trace: probes must be >= 1");
    std::vector<double> values(static_cast<std::size_t>(probes));
    double sum = 0.0;
    for (auto& v : values) {
        const Vector z = rng.rademacher_vector(dim);
        v = z.dot(apply(z));
        sum += v;
    }
    TraceEstimate out;
    out.probes = probes;
    out.mean = sum / probes;
    if (probes > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.variance = ss / (probes - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------

FullTikhonov::FullTikhonov(const InverseProblem& problem) : problem_(&problem) {
    validate_problem(problem);
    a_ = problem.A->to_dense();
    Eigen::MatrixXd at = a_;
    double alpha = 0.0;
    Eigen::MatrixXd r;
    const bool scaled_identity = is_scaled_identity(*problem.L, &alpha) && alpha > 0.0;
    if (scaled_identity) {
        at /= alpha;
    } else {
        const DenseMatrix l = problem.L->to_dense();
        Eigen::LLT<Eigen::MatrixXd> chol(Eigen::MatrixXd(l.transpose() * l));
        if (chol.info() != Eigen::Success) {
            throw InvalidArgument("full-data selection: L^T L is not positive definite");
        }
        r = chol.matrixU();
        at = r.transpose().triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(a_.transpose())).transpose();
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(at, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s_ = svd.singularValues();
    utb_ = svd.matrixU().transpose() * problem.b;
    b_perp_sq_ = (problem.b - svd.matrixU() * utb_).squaredNorm();
    if (scaled_identity) {
        w_ = svd.matrixV() / alpha;
    } else {
        w_ = r.triangularView<Eigen::Upper>().solve(svd.matrixV());
    }
}

Vector FullTikhonov::solve(double lambda) const {
    Eigen::VectorXd coef(s_.size());
    for (Index i = 0; i < s_.size(); ++i) {
        const double s = s_[i];
        coef[i] = s > 0.0 ? s * utb_[i] / (s * s + lambda) : 0.0;
    }
    return w_ * coef;
}

double FullTikhonov::residual_sq(double lambda) const {
    double sum = b_perp_sq_;
    for (Index i = 0; i < s_.size(); ++i) {
        const double s2 = s_[i] * s_[i];
        const double f = s2 > 0.0 ? lambda / (s2 + lambda) : 1.0;
        sum += f * f * utb_[i] * utb_[i];
    }
    return sum;
}

double FullTikhonov::influence_trace(double lambda) const {
    double sum = 0.0;
    for (Index i = 0; i < s_.size(); ++i) {
        const double s2 = s_[i] * s_[i];
        if (s2 > 0.0) sum += s2 / (s2 + lambda);
    }
    return sum;
}

FullDataSelection full_data_select(FullDataMethod method, const InverseProblem& problem,
                                   const GridSpec& grid_spec, double gamma) {
    if ((method == FullDataMethod::dp || method == FullDataMethod::upre) && !problem.sigma2) {
        throw InvalidArgument(std::string(to_string(method)) + ": problem has no sigma2");
    }
    if (method == FullDataMethod::opt && !problem.x_true) {
        throw InvalidArgument("opt: problem has no x_true");
    }
    const FullTikhonov tik(problem);
    const double scale = grid_spec.scaled && tik.norm_sq() > 0.0 ? tik.norm_sq() : 1.0;
    const std::vector<double> grid = log_grid(grid_spec.min * scale, grid_spec.max * scale, grid_spec.points);
    const double m = static_cast<double>(problem.rows());

    FullDataSelection out;
    switch (method) {
    case FullDataMethod::dp: {
        if (!(gamma > 0.0)) throw InvalidArgument("dp: gamma must be > 0");
        const double target = gamma * *problem.sigma2 * m;
        const Crossing c = bisect_crossing(grid.front(), grid.back(), target,
                                           [&](double lambda) { return tik.residual_sq(lambda); });
        out.lambda = c.lambda;
        out.objective = c.value;
        if (!c.crossed && std::abs(c.value - target) > 1e-4 * target) out.flag = "no-crossing";
        return out;
    }
    case FullDataMethod::upre: {
        const double s2 = *problem.sigma2;
        const Minimum best = minimize_on_grid(
            grid,
            [&](double lambda) {
                return tik.residual_sq(lambda) + 2.0 * s2 * tik.influence_trace(lambda) - s2 * m;
            },
            grid_spec.refine_iterations);
        out.lambda = best.lambda;
        out.objective = best.value;
        return out;
    }
    case FullDataMethod::gcv: {
        const Minimum best = minimize_on_grid(
            grid,
            [&](double lambda) {
                const double denom = m - tik.influence_trace(lambda);
                if (std::abs(denom) < 1e-8 * m) throw UndefinedObjective("gcv: zero denominator");
                return m * tik.residual_sq(lambda) / (denom * denom);
            },
            grid_spec.refine_iterations);
        if (!std::isfinite(best.value)) throw SelectionFailed("gcv: objective failed at every grid point");
        out.lambda = best.lambda;
        out.objective = best.value;
        return out;
    }
    case FullDataMethod::opt: {
        const Vector& xt = *problem.x_true;
        const Minimum best = minimize_on_grid(
            grid, [&](double lambda) { return (tik.solve(lambda) - xt).norm(); }, 0);
        out.lambda = best.lambda;
        out.objective = best.value / xt.norm();
        return out;
    }
    }
    return out;
}

}  // namespace stik
