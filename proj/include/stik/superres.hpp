#pragma once

// Super-resolution forward model: each low-resolution frame is
// b_i = R S_i x + e_i, with S_i a bilinear affine warp of the n x n
// high-resolution image and R block averaging down to ell x ell.
// Images are stored row-major in vectors of length n^2.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "stik/linops.hpp"
#include "stik/sampling.hpp"
#include "stik/solvers.hpp"

namespace stik {

/// Block average over (n/ell)^2 patches (ell^2 x n^2).
class RestrictionOperator final : public LinearOperator {
public:
    RestrictionOperator(Index n, Index ell);

    Index rows() const override { return ell_ * ell_; }
    Index cols() const override { return n_ * n_; }
    OperatorKind kind() const override { return OperatorKind::restriction; }

protected:
    Vector apply_unchecked(const Vector& x) const override;
    Vector apply_adjoint_unchecked(const Vector& y) const override;

private:
    Index n_;
    Index ell_;
    Index factor_;
};

/// (S x)(r, c) = x(T(r, c)) by bilinear interpolation, zero outside the image.
/// T rotates by `angle` about the image center and then shifts by (dx, dy):
/// a shift (1, 0) moves content one pixel to the right (increasing column).
class AffineOperator final : public LinearOperator {
public:
    AffineOperator(Index n, double dx, double dy, double angle);

    Index rows() const override { return n_ * n_; }
    Index cols() const override { return n_ * n_; }
    OperatorKind kind() const override { return OperatorKind::affine; }

protected:
    Vector apply_unchecked(const Vector& x) const override;
    Vector apply_adjoint_unchecked(const Vector& y) const override;

private:
    Index n_;
    // Four interpolation taps per output pixel; weight 0 marks an unused tap.
    std::vector<Index> index_;
    std::vector<double> weight_;
};

/// Throws InvalidArgument unless ell divides n.
OperatorPtr make_restriction_op(Index n, Index ell);
/// Throws InvalidArgument unless |dx|, |dy| < n and |angle| < pi.
OperatorPtr make_affine_op(Index n, double dx, double dy, double angle);

struct FrameModel {
    Index n = 0;
    Index ell = 0;
    double dx = 0.0;
    double dy = 0.0;
    double angle = 0.0;
};

/// R S_i for one frame.
OperatorPtr make_frame_operator(const FrameModel& model);

struct FrameOptions {
    Index n = 128;
    Index ell = 32;
    Index frames = 8;
    /// Shifts are uniform on [-max_shift, max_shift] high-res pixels.
    double max_shift = 2.0;
    /// Angles are uniform on [-max_angle, max_angle] radians.
    double max_angle = 0.05;
    /// Relative noise level per frame; 0 for noise-free frames.
    double noise_level = 0.01;
    std::uint64_t seed = 0;
};

struct FrameSet {
    std::vector<FrameModel> models;
    std::vector<Vector> data;
    std::vector<double> sigma2;
};

/// Random motion per frame, b_i = R S_i x + e_i with |e_i| = noise_level |R S_i x|.
FrameSet gen_frames(const Vector& image, const FrameOptions& options);

struct FrameProblem {
    InverseProblem problem;
    /// One block per frame, in frame order.
    SamplePlan plan;
};

/// Stacks the frame operators; L = I, sigma2 = mean of the frame variances.
FrameProblem make_frame_problem(const FrameSet& frames, std::optional<Vector> x_true = std::nullopt);

/// Smooth synthetic "moon" test image in [0, 1]: a disc with limb darkening
/// and a few craters, on a dark background.
Vector synthetic_moon(Index n);

/// Frames are stored as 16-bit PGM with gray = (value + frame_offset) * frame_scale.
inline constexpr double frame_offset = 0.25;
inline constexpr double frame_scale = 40000.0;

/// Writes frame_0001.pgm, frame_0001.txt ("dx dy angle"), ... to `dir`.
void write_frame_directory(const std::filesystem::path& dir, const FrameSet& frames);

/// Reads frames in index order from `dir` until the first missing index.
/// The high-resolution side n is not stored on disk and must be given.
class FrameStream {
public:
    FrameStream(std::filesystem::path dir, Index n);

    /// Next frame, or nullopt when frame_<i+1>.pgm does not exist yet.
    std::optional<std::pair<FrameModel, Vector>> next();
    Index position() const noexcept { return next_index_ - 1; }

private:
    std::filesystem::path dir_;
    Index n_;
    Index next_index_ = 1;
};

FrameSet read_frame_directory(const std::filesystem::path& dir, Index n);

}  // namespace stik
