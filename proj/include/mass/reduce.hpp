#pragma once

#include "mass/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

namespace mass {

enum class ReductionKind { none, pca, sis, pca_sis };

inline std::string to_string(ReductionKind kind) {
    switch (kind) {
        case ReductionKind::none: return "none";
        case ReductionKind::pca: return "pca";
        case ReductionKind::sis: return "sis";
        case ReductionKind::pca_sis: return "pca_sis";
    }
    return "none";
}

inline ReductionKind parse_reduction_kind(const std::string& s) {
    if (s == "none" || s.empty()) return ReductionKind::none;
    if (s == "pca") return ReductionKind::pca;
    if (s == "sis") return ReductionKind::sis;
    if (s == "pca_sis" || s == "pca-sis") return ReductionKind::pca_sis;
    throw ParameterError("unknown reduction kind '" + s + "'");
}

/// Content hash of a matrix, used to tie a fitted reduction to its training data.
inline std::uint64_t fingerprint(const Matrix& x) {
    std::uint64_t h = detail::splitmix64(static_cast<std::uint64_t>(x.rows()) * 0x9e3779b97f4a7c15ULL +
                                         static_cast<std::uint64_t>(x.cols()));
    for (Index i = 0; i < x.size(); ++i) {
        std::uint64_t bits;
        const double v = x.data()[i];
        std::memcpy(&bits, &v, sizeof bits);
        h = detail::splitmix64(h ^ bits);
    }
    return h;
}

/// A preliminary reduction fitted on training data.
struct Reduction {
    ReductionKind kind = ReductionKind::none;
    Index m = 0;
    Vector center;                // pca, pca_sis
    Matrix loadings;              // d x m (pca, pca_sis)
    std::vector<Index> indices;   // sis: selected predictors; pca_sis: selected components
    std::uint64_t fitted_on = 0;
    bool rank_limited = false;    // requested m exceeded the data rank

    Matrix apply(const Matrix& x) const {
        switch (kind) {
            case ReductionKind::none: return x;
            case ReductionKind::sis: {
                Matrix out(x.rows(), static_cast<Index>(indices.size()));
                for (std::size_t j = 0; j < indices.size(); ++j) {
                    if (indices[j] >= x.cols()) throw ShapeError("Reduction::apply: data has too few columns");
                    out.col(static_cast<Index>(j)) = x.col(indices[j]);
                }
                return out;
            }
            case ReductionKind::pca:
            case ReductionKind::pca_sis:
                if (x.cols() != loadings.rows()) {
                    throw ShapeError("Reduction::apply: loadings are " + shape_of(loadings) + ", data is " + shape_of(x));
                }
                return (x.rowwise() - center.transpose()) * loadings;
        }
        return x;
    }
};

/// m = round(2n / ln n).
inline Index intermediate_dim(Index n) {
    if (n < 8) throw ParameterError("intermediate_dim: n must be at least 8");
    const double nn = static_cast<double>(n);
    return static_cast<Index>(std::lround(2.0 * nn / std::log(nn)));
}

namespace detail {

struct CenteredSvd {
    Vector center;
    SvdResult dec;
    Index rank = 0;
};

inline CenteredSvd centered_svd(const Matrix& x) {
    CenteredSvd out;
    out.center = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - out.center.transpose();
    out.dec = svd(centered);
    const auto& s = out.dec.singular_values;
    const double tol = s.size() > 0 ? s(0) * 1e-10 * static_cast<double>(std::max(x.rows(), x.cols())) : 0.0;
    out.rank = (s.array() > tol).count();
    return out;
}

/// |Pearson correlation| of each column with y; zero-variance columns get 0.
inline Vector abs_correlations(const Matrix& x, const Labels& y) {
    const Vector yc = y.array() - y.mean();
    const double ynorm = yc.norm();
    Vector out = Vector::Zero(x.cols());
    if (ynorm == 0.0) return out;
    for (Index k = 0; k < x.cols(); ++k) {
        const Vector xc = x.col(k).array() - x.col(k).mean();
        const double xnorm = xc.norm();
        if (!(xnorm > 0.0)) continue;
        out(k) = std::abs(xc.dot(yc)) / (xnorm * ynorm);
    }
    return out;
}

inline std::vector<Index> top_by_score(const Vector& score, Index m) {
    std::vector<Index> order(static_cast<std::size_t>(score.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) > score(b); });
    order.resize(static_cast<std::size_t>(m));
    return order;
}

}  // namespace detail

/// Top-m principal directions of the column-centered training data.
inline Reduction pca_reduce(const Matrix& x_train, Index m) {
    if (m < 1 || m > std::min(x_train.rows(), x_train.cols())) {
        throw ParameterError("pca_reduce: m=" + std::to_string(m) + " out of range for " + shape_of(x_train));
    }
    auto cs = detail::centered_svd(x_train);
    Reduction r;
    r.kind = ReductionKind::pca;
    if (m > cs.rank) {
        m = cs.rank;
        r.rank_limited = true;
    }
    r.m = m;
    r.center = cs.center;
    r.loadings = cs.dec.v.leftCols(m);
    r.fitted_on = fingerprint(x_train);
    return r;
}

/// Keep the m predictors with the largest |correlation| with the labels.
inline Reduction sis_reduce(const Matrix& x_train, const Labels& y, Index m) {
    if (m < 1 || m > x_train.cols()) {
        throw ParameterError("sis_reduce: m=" + std::to_string(m) + " out of range for " + shape_of(x_train));
    }
    if (y.size() != x_train.rows()) throw ShapeError("sis_reduce: label count does not match " + shape_of(x_train));
    Reduction r;
    r.kind = ReductionKind::sis;
    r.m = m;
    r.indices = detail::top_by_score(detail::abs_correlations(x_train, y), m);
    r.fitted_on = fingerprint(x_train);
    return r;
}

/// Full PCA followed by SIS screening of the component scores.
inline Reduction pca_sis_reduce(const Matrix& x_train, const Labels& y, Index m) {
    if (m < 1 || m > x_train.rows()) {
        throw ParameterError("pca_sis_reduce: m=" + std::to_string(m) + " out of range for " + shape_of(x_train));
    }
    if (y.size() != x_train.rows()) throw ShapeError("pca_sis_reduce: label count does not match " + shape_of(x_train));
    auto cs = detail::centered_svd(x_train);
    Reduction r;
    r.kind = ReductionKind::pca_sis;
    if (m > cs.rank) {
        m = cs.rank;
        r.rank_limited = true;
    }
    r.m = m;
    r.center = cs.center;
    const Matrix full_loadings = cs.dec.v.leftCols(cs.rank);
    const Matrix scores = (x_train.rowwise() - cs.center.transpose()) * full_loadings;
    r.indices = detail::top_by_score(detail::abs_correlations(scores, y), m);
    r.loadings.resize(x_train.cols(), m);
    for (Index j = 0; j < m; ++j) r.loadings.col(j) = full_loadings.col(r.indices[static_cast<std::size_t>(j)]);
    r.fitted_on = fingerprint(x_train);
    return r;
}

inline Reduction identity_reduction(const Matrix& x_train) {
    Reduction r;
    r.kind = ReductionKind::none;
    r.m = x_train.cols();
    r.fitted_on = fingerprint(x_train);
    return r;
}

inline Reduction fit_reduction(ReductionKind kind, const Matrix& x_train, const Labels& y, Index m) {
    switch (kind) {
        case ReductionKind::none: return identity_reduction(x_train);
        case ReductionKind::pca: return pca_reduce(x_train, m);
        case ReductionKind::sis: return sis_reduce(x_train, y, m);
        case ReductionKind::pca_sis: return pca_sis_reduce(x_train, y, m);
    }
    return identity_reduction(x_train);
}

}  // namespace mass
