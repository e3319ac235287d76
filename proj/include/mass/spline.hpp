#pragma once

#include "mass/numerics.hpp"
#include "mass/projection.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace mass {

/// Natural cubic spline basis without intercept.
///
/// q functions are built on q + 1 equally spaced knots spanning the domain:
/// the identity t, followed by the q - 1 truncated-power NCS functions
/// N_k(t) = d_k(t) - d_{K-1}(t), each shifted so that it vanishes at t = 0.
/// Inputs are clamped to the domain before evaluation.
class NcsBasis {
public:
    NcsBasis() = default;

    NcsBasis(double lo, double hi, int q) : lo_(lo), hi_(hi), q_(q) {
        if (q < 3) throw ParameterError("build_ncs_basis: q must be at least 3, got " + std::to_string(q));
        if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw ParameterError("build_ncs_basis: degenerate domain");
        }
        const int nknots = q + 1;
        knots_.resize(static_cast<std::size_t>(nknots));
        for (int i = 0; i < nknots; ++i) knots_[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (nknots - 1);
        offsets_.assign(static_cast<std::size_t>(q), 0.0);
        offsets_ = raw_values(std::clamp(0.0, lo_, hi_));
    }

    int q() const { return q_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double width() const { return hi_ - lo_; }
    const std::vector<double>& knots() const { return knots_; }

    double clamp(double t) const { return std::clamp(t, lo_, hi_); }

    /// b(t), clamped to the domain.
    template <class Out>
    void values(double t, Out&& out) const {
        const auto raw = raw_values(clamp(t));
        for (int i = 0; i < q_; ++i) out(i) = raw[static_cast<std::size_t>(i)] - offsets_[static_cast<std::size_t>(i)];
    }

    Vector values(double t) const {
        Vector out(q_);
        values(t, out);
        return out;
    }

    /// b''(t); zero beyond the boundary knots.
    Vector second_derivatives(double t) const {
        Vector out = Vector::Zero(q_);
        if (t < lo_ || t > hi_) return out;
        const double last = knots_.back();
        const double penult = knots_[knots_.size() - 2];
        auto dd = [&](double knot) {
            return 6.0 * (std::max(t - knot, 0.0) - std::max(t - last, 0.0)) / (last - knot);
        };
        const double tail = dd(penult);
        for (int i = 1; i < q_; ++i) out(i) = dd(knots_[static_cast<std::size_t>(i - 1)]) - tail;
        return out;
    }

private:
    std::vector<double> raw_values(double t) const {
        std::vector<double> out(static_cast<std::size_t>(q_));
        const double last = knots_.back();
        const double penult = knots_[knots_.size() - 2];
        auto cube = [](double x) { return x > 0.0 ? x * x * x : 0.0; };
        auto d = [&](double knot) { return (cube(t - knot) - cube(t - last)) / (last - knot); };
        const double tail = d(penult);
        out[0] = t;
        for (int i = 1; i < q_; ++i) out[static_cast<std::size_t>(i)] = d(knots_[static_cast<std::size_t>(i - 1)]) - tail;
        return out;
    }

    double lo_ = -1.0;
    double hi_ = 1.0;
    int q_ = 0;
    std::vector<double> knots_;
    std::vector<double> offsets_;
};

inline NcsBasis build_ncs_basis(double lo, double hi, int q) { return NcsBasis(lo, hi, q); }

/// Basis spanning the full range of the entries of x.
inline NcsBasis build_ncs_basis_for(const Matrix& x, int q) {
    return NcsBasis(x.minCoeff(), x.maxCoeff(), q);
}

/// Grid-averaged curvature Gram matrix and its spectral factors.
struct CurvatureOperator {
    Matrix gram;
    Matrix u;
    Vector d;           // last entry is the zeroed slope direction
    double upsilon = 1; // slope of (b(t)^T U)_q against t
    int grid_points = 0;

    Index q() const { return gram.rows(); }
};

inline constexpr int kDefaultSplineDf = 6;
inline constexpr int kDefaultCurvatureGrid = 200;

inline std::vector<double> curvature_grid(const NcsBasis& basis, int t_count) {
    std::vector<double> grid(static_cast<std::size_t>(t_count));
    for (int l = 0; l < t_count; ++l) {
        grid[static_cast<std::size_t>(l)] = basis.lo() + basis.width() * l / (t_count - 1);
    }
    return grid;
}

inline CurvatureOperator curvature_gram(const NcsBasis& basis, int t_count = kDefaultCurvatureGrid) {
    const int q = basis.q();
    if (t_count < 10 * q) {
        throw ParameterError("curvature_gram: need at least 10*q grid points, got " + std::to_string(t_count));
    }
    CurvatureOperator op;
    op.grid_points = t_count;
    op.gram = Matrix::Zero(q, q);
    const auto grid = curvature_grid(basis, t_count);
    for (double t : grid) {
        const Vector b2 = basis.second_derivatives(t);
        op.gram.noalias() += b2 * b2.transpose();
    }
    op.gram /= static_cast<double>(t_count);
    op.gram = 0.5 * (op.gram + op.gram.transpose());

    const auto dec = svd(op.gram);
    op.u = dec.u;
    op.d = dec.singular_values;
    const double top = op.d(0);
    if (!(op.d(q - 1) < 1e-10 * top)) throw NumericalError("curvature_gram: no null (slope) direction found");
    if (op.d(q - 2) < 1e-10 * top) throw NumericalError("curvature_gram: basis is degenerate (several null directions)");
    op.d(q - 1) = 0.0;

    // least-squares slope through the origin of the null-direction function
    double num = 0.0, den = 0.0;
    for (double t : grid) {
        const double f = basis.values(t).dot(op.u.col(q - 1));
        num += f * t;
        den += t * t;
    }
    op.upsilon = num / den;
    return op;
}

/// Curvature-bounded spline transformation: Z = X* Theta.
struct SplineCoeffs {
    Matrix theta;  // (q*d) x p
    double lambda = 0.0;
    NcsBasis basis;
};

/// Enforces the curvature budget on every (j,k) block of one coefficient
/// column and standardizes its slope components. Masked (all-zero) blocks stay
/// zero. Returns nullopt when every slope is zero and the caller must redraw.
inline std::optional<Vector> constrain_and_standardize(const Vector& theta_raw, double lambda,
                                                       const CurvatureOperator& op) {
    const Index q = op.q();
    if (q == 0 || theta_raw.size() % q != 0) {
        throw ShapeError("constrain_and_standardize: column length " + std::to_string(theta_raw.size()) +
                         " is not a multiple of q=" + std::to_string(q));
    }
    if (!(lambda >= 0.0)) throw ParameterError("constrain_and_standardize: lambda must be non-negative");
    const Index blocks = theta_raw.size() / q;
    Matrix rotated(q, blocks);  // theta* per block
    std::vector<bool> active(static_cast<std::size_t>(blocks));
    for (Index k = 0; k < blocks; ++k) {
        const auto block = theta_raw.segment(k * q, q);
        active[static_cast<std::size_t>(k)] = !block.isZero(0.0);
        rotated.col(k).noalias() = op.u.transpose() * block;
        if (!active[static_cast<std::size_t>(k)]) continue;
        auto curved = rotated.col(k).head(q - 1);
        if (lambda == 0.0) {
            curved.setZero();
            continue;
        }
        const double c = curved.dot(op.d.head(q - 1).cwiseProduct(curved));
        if (c > 0.0) curved *= std::sqrt(lambda / c);
    }
    const double ups2 = op.upsilon * op.upsilon;
    const double slope_ss = ups2 * rotated.row(q - 1).squaredNorm();
    if (!(slope_ss > 0.0)) return std::nullopt;
    rotated.row(q - 1) /= std::sqrt(slope_ss);

    Vector out = Vector::Zero(theta_raw.size());
    for (Index k = 0; k < blocks; ++k) {
        if (active[static_cast<std::size_t>(k)]) out.segment(k * q, q).noalias() = op.u * rotated.col(k);
    }
    return out;
}

/// Candidate spline directions: one Bernoulli(1 - xi_j) mask per predictor
/// block, Gaussian coefficients inside kept blocks, then the curvature and
/// slope constraints.
inline Matrix gen_spline_columns(Index d, Index count, const SparsitySpec& spec, double lambda,
                                 const CurvatureOperator& op, RngStream& rng) {
    if (d < 1 || count < 1) throw ParameterError("gen_spline_columns: d and count must be positive");
    const Index q = op.q();
    Matrix block(q * d, count);
    const auto xi = draw_column_sparsities(count, spec, rng);
    Vector raw(q * d);
    for (Index j = 0; j < count; ++j) {
        double level = xi[static_cast<std::size_t>(j)];
        for (int attempt = 0;; ++attempt) {
            if (attempt >= kMaxColumnResamples) {
                throw NumericalError("gen_spline_columns: column " + std::to_string(j) +
                                     " stayed degenerate after 100 draws");
            }
            if (attempt > 0) level = draw_column_sparsities(1, spec, rng).front();
            const double keep = 1.0 - level;
            for (Index k = 0; k < d; ++k) {
                const bool on = rng.bernoulli(keep);
                for (Index i = 0; i < q; ++i) {
                    const double u = rng.normal();
                    raw(k * q + i) = on ? u : 0.0;
                }
            }
            if (raw.isZero(0.0)) continue;
            auto constrained = constrain_and_standardize(raw, lambda, op);
            if (!constrained) continue;
            block.col(j) = *constrained;
            break;
        }
    }
    return block;
}

/// X* = (B(x_1) | ... | B(x_d)), n x (q*d).
inline Matrix expand_features(const Matrix& x, const NcsBasis& basis) {
    const Index q = basis.q();
    const double slack = 3.0 * basis.width();
    Matrix out(x.rows(), q * x.cols());
    for (Index k = 0; k < x.cols(); ++k) {
        for (Index i = 0; i < x.rows(); ++i) {
            const double t = x(i, k);
            if (!std::isfinite(t) || t < basis.lo() - slack || t > basis.hi() + slack) {
                throw ParameterError("expand_features: value " + std::to_string(t) + " at (" + std::to_string(i) +
                                     "," + std::to_string(k) +
                                     ") lies far outside the basis domain; rebuild the basis from the data range");
            }
            basis.values(t, out.row(i).segment(k * q, q));
        }
    }
    return out;
}

/// Grid average of f''^2 for one q-vector of coefficients.
inline double curvature_quadrature(const NcsBasis& basis, const Vector& block, int t_count = kDefaultCurvatureGrid) {
    double acc = 0.0;
    for (double t : curvature_grid(basis, t_count)) {
        const double f2 = basis.second_derivatives(t).dot(block);
        acc += f2 * f2;
    }
    return acc / t_count;
}

}  // namespace mass
