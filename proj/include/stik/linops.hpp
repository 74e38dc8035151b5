#pragma once

// Matrix-free linear operators with adjoints.
//
// Every operator is immutable once built and is shared through
// `OperatorPtr`. Row blocks of an operator are index views: nothing is
// copied, a block applies its parent and keeps the selected entries.

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace stik {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class OperatorKind {
    dense,
    identity,
    scaled,
    composed,
    stacked,
    row_block,
    restriction,
    affine,
};

std::string_view to_string(OperatorKind kind);

class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    virtual Index rows() const = 0;
    virtual Index cols() const = 0;
    virtual OperatorKind kind() const = 0;

    /// y = A x. Throws InvalidArgument when x.size() != cols().
    Vector apply(const Vector& x) const;

    /// x = A^T y. Throws InvalidArgument when y.size() != rows().
    Vector apply_adjoint(const Vector& y) const;

    /// Materializes the operator column by column. Desk-scale use only.
    virtual DenseMatrix to_dense() const;

protected:
    virtual Vector apply_unchecked(const Vector& x) const = 0;
    virtual Vector apply_adjoint_unchecked(const Vector& y) const = 0;

    friend class RowBlockView;
    friend class StackedOperator;
    friend class ComposedOperator;
    friend class ScaledOperator;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class DenseOperator final : public LinearOperator {
public:
    explicit DenseOperator(DenseMatrix matrix);

    Index rows() const override { return matrix_.rows(); }
    Index cols() const override { return matrix_.cols(); }
    OperatorKind kind() const override { return OperatorKind::dense; }
    DenseMatrix to_dense() const override { return matrix_; }

    const DenseMatrix& matrix() const noexcept { return matrix_; }

protected:
    Vector apply_unchecked(const Vector& x) const override;
    Vector apply_adjoint_unchecked(const Vector& y) const override;

private:
    DenseMatrix matrix_;
};

class IdentityOperator final : public LinearOperator {
public:
    explicit IdentityOperator(Index n);

    Index rows() const override { return n_; }
    Index cols() const override { return n_; }
    OperatorKind kind() const override { return OperatorKind::identity; }
    DenseMatrix to_dense() const override;

protected:
    Vector apply_unchecked(const Vector& x) const override { return x; }
    Vector apply_adjoint_unchecked(const Vector& y) const override { return y; }

private:
    Index n_;
};

/// alpha * A
class ScaledOperator final : public LinearOperator {
public:
    ScaledOperator(double alpha, OperatorPtr op);

    Index rows() const override { return op_->rows(); }
    Index cols() const override { return op_->cols(); }
    OperatorKind kind() const override { return OperatorKind::scaled; }

    double alpha() const noexcept { return alpha_; }
    const OperatorPtr& base() const noexcept { return op_; }

protected:
    Vector apply_unchecked(const Vector& x) const override;
    Vector apply_adjoint_unchecked(const Vector& y) const override;

private:
    double alpha_;
    OperatorPtr op_;
};

/// outer ∘ inner, evaluated factor by factor.
class ComposedOperator final : public LinearOperator {
public:
    ComposedOperator(OperatorPtr outer, OperatorPtr inner);

    Index rows() const override { return outer_->rows(); }
    Index cols() const override { return inner_->cols(); }
    OperatorKind kind() const override { return OperatorKind::composed; }

    const OperatorPtr& outer() const noexcept { return outer_; }
    const OperatorPtr& inner() const noexcept { return inner_; }

protected:
    Vector apply_unchecked(const Vector& x) const override;
    Vector apply_adjoint_unchecked(const Vector& y) const override;

private:
    OperatorPtr outer_;
    OperatorPtr inner_;
};

/// Vertical concatenation [A_1; A_2; ...] of operators sharing a column count.
class StackedOperator final : public LinearOperator {
public:
    explicit StackedOperator(std::vector<OperatorPtr> parts);

    Index rows() const override { return rows_; }
    Index cols() const override { return cols_; }
    OperatorKind kind() const override { return OperatorKind::stacked; }

    const std::vector<OperatorPtr>& parts() const noexcept { return parts_; }

protected:
    Vector apply_unchecked(const Vector& x) const override;
    Vector apply_adjoint_unchecked(const Vector& y) const override;

private:
    std::vector<OperatorPtr> parts_;
    Index rows_ = 0;
    Index cols_ = 0;
};

/// W^T A for a row-selection W: the rows `rows` of `parent`, in order.
class RowBlockView final : public LinearOperator {
public:
    RowBlockView(OperatorPtr parent, std::vector<Index> rows);

    Index rows() const override { return static_cast<Index>(rows_.size()); }
    Index cols() const override { return parent_->cols(); }
    OperatorKind kind() const override { return OperatorKind::row_block; }
    DenseMatrix to_dense() const override;

    const OperatorPtr& parent() const noexcept { return parent_; }
    std::span<const Index> indices() const noexcept { return rows_; }

protected:
    Vector apply_unchecked(const Vector& x) const override;
    Vector apply_adjoint_unchecked(const Vector& y) const override;

private:
    OperatorPtr parent_;
    std::vector<Index> rows_;
    const DenseOperator* dense_parent_ = nullptr;
    // Set when the rows are exactly one part of a stacked parent, in order.
    const LinearOperator* stacked_part_ = nullptr;
};

OperatorPtr make_dense(DenseMatrix matrix);
OperatorPtr make_identity(Index n);
OperatorPtr make_scaled(double alpha, OperatorPtr op);
OperatorPtr make_composed(OperatorPtr outer, OperatorPtr inner);
OperatorPtr make_stacked(std::vector<OperatorPtr> parts);

/// Throws InvalidArgument for an out-of-range or repeated index.
std::shared_ptr<const RowBlockView> row_block(OperatorPtr op, std::vector<Index> rows);

/// Selects `rows` entries of v.
Vector gather(const Vector& v, std::span<const Index> rows);

/// True when op is (a positive multiple of) the identity; sets *alpha to the multiple.
bool is_scaled_identity(const LinearOperator& op, double* alpha = nullptr);

/// Relative adjoint mismatch |<Ax,y> - <x,A^T y>| / (|Ax||y| + |x||A^T y|).
double adjoint_mismatch(const LinearOperator& op, const Vector& x, const Vector& y);

/// Largest singular value of `op` by power iteration on A^T A.
double estimate_norm(const LinearOperator& op, int iterations = 30);

}  // namespace stik
