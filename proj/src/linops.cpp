#include "stik/linops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stik/errors.hpp"

namespace stik {

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
    case OperatorKind::dense: return "dense";
    case OperatorKind::identity: return "identity";
    case OperatorKind::scaled: return "scaled";
    case OperatorKind::composed: return "composed";
    case OperatorKind::stacked: return "stacked";
    case OperatorKind::row_block: return "row_block";
    case OperatorKind::restriction: return "restriction";
    case OperatorKind::affine: return "affine";
    }
    return "unknown";
}

Vector LinearOperator::apply(const Vector& x) const {
    if (x.size() != cols()) {
        throw InvalidArgument("apply: expected vector of length " + std::to_string(cols()) +
                              ", got " + std::to_string(x.size()));
    }
    return apply_unchecked(x);
}

Vector LinearOperator::apply_adjoint(const Vector& y) const {
    if (y.size() != rows()) {
        throw InvalidArgument("apply_adjoint: expected vector of length " +
                              std::to_string(rows()) + ", got " + std::to_string(y.size()));
    }
    return apply_adjoint_unchecked(y);
}

DenseMatrix LinearOperator::to_dense() const {
    DenseMatrix out(rows(), cols());
    Vector e = Vector::Zero(cols());
    for (Index j = 0; j < cols(); ++j) {
        e[j] = 1.0;
        out.col(j) = apply_unchecked(e);
        e[j] = 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------

DenseOperator::DenseOperator(DenseMatrix matrix) : matrix_(std::move(matrix)) {}

Vector DenseOperator::apply_unchecked(const Vector& x) const { return matrix_ * x; }

Vector DenseOperator::apply_adjoint_unchecked(const Vector& y) const {
    return matrix_.transpose() * y;
}

IdentityOperator::IdentityOperator(Index n) : n_(n) {
    if (n <= 0) throw InvalidArgument("identity operator needs n > 0");
}

DenseMatrix IdentityOperator::to_dense() const { return DenseMatrix::Identity(n_, n_); }

ScaledOperator::ScaledOperator(double alpha, OperatorPtr op) : alpha_(alpha), op_(std::move(op)) {
    if (!op_) throw InvalidArgument("scaled operator: null operand");
}

Vector ScaledOperator::apply_unchecked(const Vector& x) const {
    return alpha_ * op_->apply_unchecked(x);
}

Vector ScaledOperator::apply_adjoint_unchecked(const Vector& y) const {
    return alpha_ * op_->apply_adjoint_unchecked(y);
}

ComposedOperator::ComposedOperator(OperatorPtr outer, OperatorPtr inner)
    : outer_(std::move(outer)), inner_(std::move(inner)) {
    if (!outer_ || !inner_) throw InvalidArgument("composed operator: null factor");
    if (outer_->cols() != inner_->rows()) {
        throw InvalidArgument("composed operator: inner has " + std::to_string(inner_->rows()) +
                              " rows but outer expects " + std::to_string(outer_->cols()));
    }
}

Vector ComposedOperator::apply_unchecked(const Vector& x) const {
    return outer_->apply_unchecked(inner_->apply_unchecked(x));
}

Vector ComposedOperator::apply_adjoint_unchecked(const Vector& y) const {
    return inner_->apply_adjoint_unchecked(outer_->apply_adjoint_unchecked(y));
}

StackedOperator::StackedOperator(std::vector<OperatorPtr> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw InvalidArgument("stacked operator: no parts");
    cols_ = parts_.front()->cols();
    for (const auto& p : parts_) {
        if (!p) throw InvalidArgument("stacked operator: null part");
        if (p->cols() != cols_) throw InvalidArgument("stacked operator: column count mismatch");
        rows_ += p->rows();
    }
}

Vector StackedOperator::apply_unchecked(const Vector& x) const {
    Vector y(rows_);
    Index offset = 0;
    for (const auto& p : parts_) {
        y.segment(offset, p->rows()) = p->apply_unchecked(x);
        offset += p->rows();
    }
    return y;
}

Vector StackedOperator::apply_adjoint_unchecked(const Vector& y) const {
    Vector x = Vector::Zero(cols_);
    Index offset = 0;
    for (const auto& p : parts_) {
        x += p->apply_adjoint_unchecked(y.segment(offset, p->rows()));
        offset += p->rows();
    }
    return x;
}

RowBlockView::RowBlockView(OperatorPtr parent, std::vector<Index> rows)
    : parent_(std::move(parent)), rows_(std::move(rows)) {
    if (!parent_) throw InvalidArgument("row block: null parent");
    if (rows_.empty()) throw InvalidArgument("row block: empty index list");
    std::vector<Index> sorted = rows_;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0 || sorted.back() >= parent_->rows()) {
        throw InvalidArgument("row block: index out of range [0, " +
                              std::to_string(parent_->rows()) + ")");
    }
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument("row block: duplicate row index");
    }
    dense_parent_ = dynamic_cast<const DenseOperator*>(parent_.get());
    if (const auto* stacked = dynamic_cast<const StackedOperator*>(parent_.get())) {
        Index offset = 0;
        for (const auto& part : stacked->parts()) {
            const auto count = static_cast<Index>(rows_.size());
            if (rows_.front() == offset && count == part->rows()) {
                bool contiguous = true;
                for (Index i = 0; i < count && contiguous; ++i) {
                    contiguous = rows_[static_cast<std::size_t>(i)] == offset + i;
                }
                if (contiguous) stacked_part_ = part.get();
                break;
            }
            offset += part->rows();
        }
    }
}

Vector RowBlockView::apply_unchecked(const Vector& x) const {
    Vector y(rows());
    if (dense_parent_ != nullptr) {
        const auto& a = dense_parent_->matrix();
        for (Index i = 0; i < rows(); ++i) y[i] = a.row(rows_[static_cast<std::size_t>(i)]).dot(x);
        return y;
    }
    if (stacked_part_ != nullptr) return stacked_part_->apply_unchecked(x);
    return gather(parent_->apply_unchecked(x), rows_);
}

Vector RowBlockView::apply_adjoint_unchecked(const Vector& y) const {
    if (dense_parent_ != nullptr) {
        const auto& a = dense_parent_->matrix();
        Vector x = Vector::Zero(cols());
        for (Index i = 0; i < rows(); ++i) {
            x += y[i] * a.row(rows_[static_cast<std::size_t>(i)]).transpose();
        }
        return x;
    }
    if (stacked_part_ != nullptr) return stacked_part_->apply_adjoint_unchecked(y);
    Vector full = Vector::Zero(parent_->rows());
    for (Index i = 0; i < rows(); ++i) full[rows_[static_cast<std::size_t>(i)]] = y[i];
    return parent_->apply_adjoint_unchecked(full);
}

DenseMatrix RowBlockView::to_dense() const {
    if (dense_parent_ == nullptr) return LinearOperator::to_dense();
    DenseMatrix out(rows(), cols());
    for (Index i = 0; i < rows(); ++i) {
        out.row(i) = dense_parent_->matrix().row(rows_[static_cast<std::size_t>(i)]);
    }
    return out;
}

// ---------------------------------------------------------------------------

OperatorPtr make_dense(DenseMatrix matrix) {
    return std::make_shared<DenseOperator>(std::move(matrix));
}

OperatorPtr make_identity(Index n) { return std::make_shared<IdentityOperator>(n); }

OperatorPtr make_scaled(double alpha, OperatorPtr op) {
    return std::make_shared<ScaledOperator>(alpha, std::move(op));
}

OperatorPtr make_composed(OperatorPtr outer, OperatorPtr inner) {
    return std::make_shared<ComposedOperator>(std::move(outer), std::move(inner));
}

OperatorPtr make_stacked(std::vector<OperatorPtr> parts) {
    return std::make_shared<StackedOperator>(std::move(parts));
}

std::shared_ptr<const RowBlockView> row_block(OperatorPtr op, std::vector<Index> rows) {
    return std::make_shared<RowBlockView>(std::move(op), std::move(rows));
}

Vector gather(const Vector& v, std::span<const Index> rows) {
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
    return out;
}

bool is_scaled_identity(const LinearOperator& op, double* alpha) {
    if (op.kind() == OperatorKind::identity) {
        if (alpha) *alpha = 1.0;
        return true;
    }
    if (const auto* s = dynamic_cast<const ScaledOperator*>(&op)) {
        double inner = 1.0;
        if (s->alpha() > 0.0 && is_scaled_identity(*s->base(), &inner)) {
            if (alpha) *alpha = s->alpha() * inner;
            return true;
        }
    }
    return false;
}

double adjoint_mismatch(const LinearOperator& op, const Vector& x, const Vector& y) {
    const Vector ax = op.apply(x);
    const Vector aty = op.apply_adjoint(y);
    const double lhs = ax.dot(y);
    const double rhs = x.dot(aty);
    const double scale = ax.norm() * y.norm() + x.norm() * aty.norm();
    if (scale == 0.0) return std::abs(lhs - rhs);
    return std::abs(lhs - rhs) / scale;
}

double estimate_norm(const LinearOperator& op, int iterations) {
    Vector v = Vector::Ones(op.cols()) / std::sqrt(static_cast<double>(op.cols()));
    double sigma = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = op.apply_adjoint(op.apply(v));
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        sigma = std::sqrt(nw);
        v = w / nw;
    }
    return sigma;
}

}  // namespace stik
