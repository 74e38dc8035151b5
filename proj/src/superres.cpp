#include "stik/superres.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "stik/errors.hpp"
#include "stik/pgm.hpp"
#include "stik/problems.hpp"
#include "stik/random.hpp"

namespace stik {

RestrictionOperator::RestrictionOperator(Index n, Index ell) : n_(n), ell_(ell) {
    if (n < 1 || ell < 1) throw InvalidArgument("restriction: sizes must be positive");
    if (n % ell != 0) {
        throw InvalidArgument("restriction: low-res side " + std::to_string(ell) +
                              " does not divide high-res side " + std::to_string(n));
    }
    factor_ = n / ell;
}

Vector RestrictionOperator::apply_unchecked(const Vector& x) const {
    Vector y = Vector::Zero(ell_ * ell_);
    const double w = 1.0 / static_cast<double>(factor_ * factor_);
    for (Index r = 0; r < n_; ++r) {
        const Index rr = r / factor_;
        for (Index c = 0; c < n_; ++c) y[rr * ell_ + c / factor_] += x[r * n_ + c];
    }
    return y * w;
}

Vector RestrictionOperator::apply_adjoint_unchecked(const Vector& y) const {
    Vector x(n_ * n_);
    const double w = 1.0 / static_cast<double>(factor_ * factor_);
    for (Index r = 0; r < n_; ++r) {
        const Index rr = r / factor_;
        for (Index c = 0; c < n_; ++c) x[r * n_ + c] = w * y[rr * ell_ + c / factor_];
    }
    return x;
}

AffineOperator::AffineOperator(Index n, double dx, double dy, double angle) : n_(n) {
    if (n < 1) throw InvalidArgument("affine: size must be positive");
    const double nn = static_cast<double>(n);
    if (!(std::abs(dx) < nn) || !(std::abs(dy) < nn)) throw InvalidArgument("affine: |shift| must be < n");
    if (!(std::abs(angle) < std::numbers::pi)) throw InvalidArgument("affine: |angle| must be < pi");

    const auto pixels = static_cast<std::size_t>(n * n);
    index_.assign(4 * pixels, 0);
    weight_.assign(4 * pixels, 0.0);
    const double center = 0.5 * (nn - 1.0);
    const double cs = std::cos(angle);
    const double sn = std::sin(angle);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
            // Source location of output pixel (r, c): undo the shift, then the rotation.
            const double u = static_cast<double>(c) - dx - center;
            const double v = static_cast<double>(r) - dy - center;
            const double sc = cs * u + sn * v + center;
            const double sr = -sn * u + cs * v + center;
            const double fc = std::floor(sc);
            const double fr = std::floor(sr);
            const double tc = sc - fc;
            const double tr = sr - fr;
            const auto c0 = static_cast<Index>(fc);
            const auto r0 = static_cast<Index>(fr);
            const std::size_t base = 4 * static_cast<std::size_t>(r * n + c);
            const Index rr[4] = {r0, r0, r0 + 1, r0 + 1};
            const Index cc[4] = {c0, c0 + 1, c0, c0 + 1};
            const double ww[4] = {(1 - tr) * (1 - tc), (1 - tr) * tc, tr * (1 - tc), tr * tc};
            for (int t = 0; t < 4; ++t) {
                if (ww[t] == 0.0 || rr[t] < 0 || rr[t] >= n || cc[t] < 0 || cc[t] >= n) continue;
                index_[base + t] = rr[t] * n + cc[t];
                weight_[base + t] = ww[t];
            }
        }
    }
}

Vector AffineOperator::apply_unchecked(const Vector& x) const {
    Vector y(n_ * n_);
    for (Index p = 0; p < y.size(); ++p) {
        const std::size_t base = 4 * static_cast<std::size_t>(p);
        double s = 0.0;
        for (std::size_t t = 0; t < 4; ++t) s += weight_[base + t] * x[index_[base + t]];
        y[p] = s;
    }
    return y;
}

Vector AffineOperator::apply_adjoint_unchecked(const Vector& y) const {
    Vector x = Vector::Zero(n_ * n_);
    for (Index p = 0; p < y.size(); ++p) {
        const std::size_t base = 4 * static_cast<std::size_t>(p);
        for (std::size_t t = 0; t < 4; ++t) x[index_[base + t]] += weight_[base + t] * y[p];
    }
    return x;
}

OperatorPtr make_restriction_op(Index n, Index ell) {
    if (n == ell && n > 0) return make_identity(n * n);
    return std::make_shared<RestrictionOperator>(n, ell);
}

OperatorPtr make_affine_op(Index n, double dx, double dy, double angle) {
    return std::make_shared<AffineOperator>(n, dx, dy, angle);
}

OperatorPtr make_frame_operator(const FrameModel& model) {
    return make_composed(make_restriction_op(model.n, model.ell),
                         make_affine_op(model.n, model.dx, model.dy, model.angle));
}

FrameSet gen_frames(const Vector& image, const FrameOptions& options) {
    if (image.size() != options.n * options.n) {
        throw InvalidArgument("gen_frames: image has " + std::to_string(image.size()) +
                              " pixels, expected n^2 = " + std::to_string(options.n * options.n));
    }
    if (options.frames < 1) throw InvalidArgument("gen_frames: need at least one frame");
    if (options.noise_level < 0.0) throw InvalidArgument("gen_frames: noise level must be >= 0");
    Rng motion(derive_seed(options.seed, "motion"));
    FrameSet out;
    for (Index i = 0; i < options.frames; ++i) {
        FrameModel m;
        m.n = options.n;
        m.ell = options.ell;
        m.dx = options.max_shift * (2.0 * motion.uniform() - 1.0);
        m.dy = options.max_shift * (2.0 * motion.uniform() - 1.0);
        m.angle = options.max_angle * (2.0 * motion.uniform() - 1.0);
        const Vector clean = make_frame_operator(m)->apply(image);
        if (options.noise_level > 0.0) {
            NoisyData noisy = add_noise(clean, NoiseMode::level, options.noise_level,
                                        derive_seed(options.seed, "noise:" + std::to_string(i)));
            out.data.push_back(std::move(noisy.b));
            out.sigma2.push_back(noisy.sigma2);
        } else {
            out.data.push_back(clean);
            out.sigma2.push_back(0.0);
        }
        out.models.push_back(m);
    }
    return out;
}

FrameProblem make_frame_problem(const FrameSet& frames, std::optional<Vector> x_true) {
    if (frames.models.empty()) throw InvalidArgument("frame problem: no frames");
    if (frames.data.size() != frames.models.size()) throw InvalidArgument("frame problem: data/model count mismatch");
    const Index n = frames.models.front().n;
    const Index ell = frames.models.front().ell;
    std::vector<OperatorPtr> parts;
    Index rows = 0;
    double sigma2 = 0.0;
    for (std::size_t i = 0; i < frames.models.size(); ++i) {
        const FrameModel& m = frames.models[i];
        if (m.n != n || m.ell != ell) throw InvalidArgument("frame problem: frames differ in size");
        if (frames.data[i].size() != ell * ell) throw InvalidArgument("frame problem: frame data has the wrong size");
        parts.push_back(make_frame_operator(m));
        rows += ell * ell;
        if (i < frames.sigma2.size()) sigma2 += frames.sigma2[i];
    }
    FrameProblem out;
    out.problem.A = make_stacked(std::move(parts));
    out.problem.b.resize(rows);
    for (std::size_t i = 0; i < frames.data.size(); ++i) {
        out.problem.b.segment(static_cast<Index>(i) * ell * ell, ell * ell) = frames.data[i];
    }
    out.problem.L = make_identity(n * n);
    if (!frames.sigma2.empty()) out.problem.sigma2 = sigma2 / static_cast<double>(frames.sigma2.size());
    out.problem.x_true = std::move(x_true);
    out.plan = make_block_partition(rows, static_cast<Index>(frames.models.size()), SamplingStrategy::cyclic, 0);
    return out;
}

Vector synthetic_moon(Index n) {
    if (n < 2) throw InvalidArgument("synthetic_moon: n must be >= 2");
    struct Crater {
        double x, y, radius, depth;
    };
    static constexpr Crater craters[] = {
        {-0.30, -0.25, 0.16, 0.45}, {0.28, 0.10, 0.22, 0.35}, {0.05, 0.45, 0.10, 0.5},
        {-0.45, 0.30, 0.08, 0.4},   {0.40, -0.40, 0.07, 0.5}, {-0.05, -0.05, 0.05, 0.6},
    };
    Vector img(n * n);
    const double nn = static_cast<double>(n);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
            const double x = (2.0 * (static_cast<double>(c) + 0.5) / nn - 1.0) / 0.85;
            const double y = (2.0 * (static_cast<double>(r) + 0.5) / nn - 1.0) / 0.85;
            const double rho2 = x * x + y * y;
            // Smooth edge over a few pixels keeps the disc band-limited enough for bilinear warps.
            const double edge = 0.5 * (1.0 - std::tanh((std::sqrt(rho2) - 1.0) * nn / 6.0));
            double v = 0.35 + 0.55 * std::sqrt(std::max(0.0, 1.0 - 0.6 * rho2));
            for (const Crater& k : craters) {
                const double d2 = ((x - k.x) * (x - k.x) + (y - k.y) * (y - k.y)) / (k.radius * k.radius);
                v -= k.depth * 0.6 * std::exp(-d2 * d2);
                v += k.depth * 0.25 * std::exp(-(d2 - 1.0) * (d2 - 1.0) * 8.0);
            }
            img[r * n + c] = std::clamp(v, 0.0, 1.0) * edge + 0.02;
        }
    }
    return img;
}

// ---------------------------------------------------------------------------

namespace {

std::filesystem::path frame_path(const std::filesystem::path& dir, Index i, const char* ext) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04ld.%s", static_cast<long>(i), ext);
    return dir / name;
}

}  // namespace

void write_frame_directory(const std::filesystem::path& dir, const FrameSet& frames) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < frames.models.size(); ++i) {
        const FrameModel& m = frames.models[i];
        GrayImage img;
        img.width = m.ell;
        img.height = m.ell;
        img.maxval = 65535;
        img.pixels = (frames.data[i].array() + frame_offset) * frame_scale;
        const auto idx = static_cast<Index>(i + 1);
        write_pgm(frame_path(dir, idx, "pgm"), img);
        std::ofstream side(frame_path(dir, idx, "txt"));
        side.precision(17);
        side << m.dx << ' ' << m.dy << ' ' << m.angle;
        if (i < frames.sigma2.size()) side << ' ' << frames.sigma2[i];
        side << '\n';
        if (!side) throw InvalidArgument("cannot write " + frame_path(dir, idx, "txt").string());
    }
}

FrameStream::FrameStream(std::filesystem::path dir, Index n) : dir_(std::move(dir)), n_(n) {
    if (n < 1) throw InvalidArgument("frame stream: n must be positive");
}

std::optional<std::pair<FrameModel, Vector>> FrameStream::next() {
    const auto pgm = frame_path(dir_, next_index_, "pgm");
    const auto txt = frame_path(dir_, next_index_, "txt");
    if (!std::filesystem::exists(pgm)) return std::nullopt;
    if (!std::filesystem::exists(txt)) throw InvalidArgument(pgm.string() + ": missing motion sidecar");

    const GrayImage img = read_pgm(pgm);
    if (img.width != img.height) throw InvalidArgument(pgm.string() + ": frames must be square");
    FrameModel m;
    m.n = n_;
    m.ell = img.width;
    std::ifstream side(txt);
    if (!(side >> m.dx >> m.dy >> m.angle)) {
        throw InvalidArgument(txt.string() + ": expected 'dx dy angle'");
    }
    ++next_index_;
    return std::make_pair(m, Vector(img.pixels.array() / frame_scale - frame_offset));
}

FrameSet read_frame_directory(const std::filesystem::path& dir, Index n) {
    if (!std::filesystem::is_directory(dir)) throw InvalidArgument(dir.string() + ": not a directory");
    FrameStream stream(dir, n);
    FrameSet out;
    bool have_sigma = true;
    std::vector<double> sigma;
    while (auto frame = stream.next()) {
        std::ifstream side(frame_path(dir, stream.position(), "txt"));
        double a = 0, b = 0, c = 0, s = 0;
        side >> a >> b >> c;
        if (side >> s) {
            sigma.push_back(s);
        } else {
            have_sigma = false;
        }
        out.models.push_back(frame->first);
        out.data.push_back(std::move(frame->second));
    }
    if (out.models.empty()) throw InvalidArgument(dir.string() + ": no frame_0001.pgm found");
    if (have_sigma) out.sigma2 = std::move(sigma);
    return out;
}

}  // namespace stik
