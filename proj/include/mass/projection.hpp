#pragma once

#include "mass/numerics.hpp"

#include <algorithm>
#include <vector>

namespace mass {

/// Fraction of entries that are exactly zero.
template <class Derived>
inline double sparsity_of(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) throw ShapeError("sparsity_of: empty matrix");
    return static_cast<double>((m.array() == 0.0).count()) / static_cast<double>(m.size());
}

/// d x p transformation with unit-norm columns.
struct ProjectionMatrix {
    Matrix entries;

    Index dim() const { return entries.rows(); }
    Index cols() const { return entries.cols(); }
    double mean_sparsity() const { return sparsity_of(entries); }
    std::vector<double> col_sparsity() const {
        std::vector<double> out(static_cast<std::size_t>(entries.cols()));
        for (Index j = 0; j < entries.cols(); ++j) out[static_cast<std::size_t>(j)] = sparsity_of(entries.col(j));
        return out;
    }
};

inline constexpr double kSparsityClampLo = 0.01;
inline constexpr double kSparsityClampHi = 0.99;

struct SparsitySpec {
    double target = 0.5;
    double alpha = 5.0;
    /// MFSS runs with target 0 skip the Beta draw and generate exactly dense
    /// columns. Adaptive runs leave this off so a zero mean stays recoverable.
    bool dense_at_zero = false;

    double clamped_target() const { return std::clamp(target, kSparsityClampLo, kSparsityClampHi); }
    double beta_a() const { return alpha; }
    double beta_b() const {
        const double xi = clamped_target();
        return alpha * (1.0 - xi) / xi;
    }
};

/// Per-column sparsity levels xi_j ~ Beta(alpha, alpha (1 - xi) / xi).
inline std::vector<double> draw_column_sparsities(Index count, const SparsitySpec& spec, RngStream& rng) {
    if (count < 0) throw ParameterError("draw_column_sparsities: negative count");
    if (!(spec.alpha > 0.0)) throw ParameterError("draw_column_sparsities: alpha must be positive");
    std::vector<double> xi(static_cast<std::size_t>(count));
    if (spec.dense_at_zero && spec.target == 0.0) {
        std::fill(xi.begin(), xi.end(), 0.0);
        return xi;
    }
    const double a = spec.beta_a();
    const double b = spec.beta_b();
    for (auto& x : xi) x = rng.beta(a, b);
    return xi;
}

inline constexpr int kMaxColumnResamples = 100;

/// Fills `column` with u * Bernoulli(1 - xi) entries and rescales it to unit
/// norm. Returns false if the mask came out all-zero.
template <class Col>
inline bool try_fill_sparse_column(Col&& column, double xi, RngStream& rng) {
    const double keep = 1.0 - xi;
    for (Index k = 0; k < column.size(); ++k) {
        const double u = rng.normal();
        column(k) = rng.bernoulli(keep) ? u : 0.0;
    }
    const double norm = column.norm();
    if (norm == 0.0) return false;
    column /= norm;
    return true;
}

/// Fresh block of `count` unit-norm sparse candidate directions in R^d.
inline Matrix gen_candidate_columns(Index d, Index count, const SparsitySpec& spec, RngStream& rng) {
    if (d < 1 || count < 1) throw ParameterError("gen_candidate_columns: d and count must be positive");
    Matrix block(d, count);
    const auto xi = draw_column_sparsities(count, spec, rng);
    for (Index j = 0; j < count; ++j) {
        double level = xi[static_cast<std::size_t>(j)];
        int attempts = 0;
        while (!try_fill_sparse_column(block.col(j), level, rng)) {
            if (++attempts >= kMaxColumnResamples) {
                throw NumericalError("gen_candidate_columns: column " + std::to_string(j) +
                                     " stayed all-zero after 100 draws (xi=" + std::to_string(level) + ")");
            }
            level = draw_column_sparsities(1, spec, rng).front();
        }
    }
    return block;
}

/// Z = X A.
template <class DX, class DA>
inline Matrix project(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DA>& a) {
    if (x.cols() != a.rows()) {
        throw ShapeError("project: cannot multiply " + shape_of(x) + " data by " + shape_of(a) + " projection");
    }
    return x * a;
}

inline Matrix project(const Matrix& x, const ProjectionMatrix& a) { return project(x, a.entries); }

}  // namespace mass
