#pragma once

#include "mass/classify.hpp"
#include "mass/numerics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace mass {

struct SelectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Breakpoints of a lasso-modified LARS path on standardized data.
struct LarsPath {
    std::vector<Index> entry_order;  // first activation only
    std::vector<Vector> coef_path;   // standardized-scale coefficients per breakpoint
    std::vector<double> rss_path;
    std::vector<double> lambda_path; // max |X^T r| at each breakpoint
    std::vector<Index> skipped;      // constant or collinear columns
    std::vector<Index> active;       // active set at the last breakpoint
};

struct StandardizedDesign {
    Matrix x;      // centered, unit-norm columns (zero for skipped)
    Vector y;      // centered response
    std::vector<bool> usable;
};

inline StandardizedDesign standardize_for_lars(const Matrix& z, const Vector& y) {
    if (z.rows() != y.size()) {
        throw ShapeError("lars_path: " + shape_of(z) + " design with " + std::to_string(y.size()) + " responses");
    }
    StandardizedDesign s;
    s.x = z.rowwise() - z.colwise().mean();
    s.y = y.array() - y.mean();
    s.usable.assign(static_cast<std::size_t>(z.cols()), true);
    for (Index j = 0; j < z.cols(); ++j) {
        const double scale = z.col(j).cwiseAbs().maxCoeff();
        const double norm = s.x.col(j).norm();
        if (!(norm > 1e-12 * std::max(scale, 1.0) * std::sqrt(static_cast<double>(z.rows())))) {
            s.usable[static_cast<std::size_t>(j)] = false;
            s.x.col(j).setZero();
        } else {
            s.x.col(j) /= norm;
        }
    }
    return s;
}

/// Least angle regression with the lasso modification. The path stops once
/// `max_steps` distinct columns have entered, when the active set saturates
/// (n - 1 columns), or when the residual is orthogonal to every column.
/// Exactly tied correlations go to the lowest column index.
inline LarsPath lars_path(const Matrix& z, const Vector& y, Index max_steps) {
    const auto s = standardize_for_lars(z, y);
    const Index n = z.rows();
    const Index m = z.cols();
    LarsPath path;
    for (Index j = 0; j < m; ++j)
        if (!s.usable[static_cast<std::size_t>(j)]) path.skipped.push_back(j);
    const Index usable = m - static_cast<Index>(path.skipped.size());
    if (usable == 0) throw SelectionError("lars_path: every column of the " + shape_of(z) + " design is constant");

    const Index max_active = std::min(usable, n - 1);
    max_steps = std::min(max_steps, max_active);
    constexpr double eps = 1e-12;

    Vector beta = Vector::Zero(m);
    Vector mu = Vector::Zero(n);
    std::vector<bool> in_active(static_cast<std::size_t>(m), false);
    std::vector<bool> entered(static_cast<std::size_t>(m), false);
    std::vector<bool> blocked(static_cast<std::size_t>(m), false);
    for (Index j : path.skipped) blocked[static_cast<std::size_t>(j)] = true;
    std::vector<Index>& active = path.active;

    auto record = [&](double lambda) {
        path.coef_path.push_back(beta);
        path.rss_path.push_back((s.y - mu).squaredNorm());
        path.lambda_path.push_back(lambda);
    };

    Vector c = s.x.transpose() * s.y;
    record(c.cwiseAbs().maxCoeff());

    auto activate = [&](Index j) {
        in_active[static_cast<std::size_t>(j)] = true;
        active.push_back(j);
        if (!entered[static_cast<std::size_t>(j)]) {
            entered[static_cast<std::size_t>(j)] = true;
            path.entry_order.push_back(j);
        }
    };

    // first entrant: largest |correlation|, lowest index on ties
    {
        Index best = -1;
        double best_val = -1.0;
        for (Index j = 0; j < m; ++j) {
            if (blocked[static_cast<std::size_t>(j)]) continue;
            if (std::abs(c(j)) > best_val) {
                best_val = std::abs(c(j));
                best = j;
            }
        }
        if (best_val <= eps) return path;
        activate(best);
    }

    const Index step_cap = 8 * std::max<Index>(max_active, 1) + 16;
    for (Index step = 0; step < step_cap; ++step) {
        if (static_cast<Index>(path.entry_order.size()) > max_steps) break;
        c.noalias() = s.x.transpose() * (s.y - mu);
        double big_c = 0.0;
        for (Index j : active) big_c = std::max(big_c, std::abs(c(j)));
        if (big_c <= eps) break;

        const Index k = static_cast<Index>(active.size());
        Matrix xa(n, k);
        Vector sign(k);
        for (Index a = 0; a < k; ++a) {
            sign(a) = c(active[static_cast<std::size_t>(a)]) >= 0.0 ? 1.0 : -1.0;
            xa.col(a) = sign(a) * s.x.col(active[static_cast<std::size_t>(a)]);
        }
        const Matrix gram = xa.transpose() * xa;
        Eigen::LDLT<Matrix> ldlt(gram);
        const Vector ginv1 = ldlt.solve(Vector::Ones(k));
        const double denom = ginv1.sum();
        if (!(denom > 0.0) || !ginv1.allFinite()) break;
        const double aa = 1.0 / std::sqrt(denom);
        const Vector w = aa * ginv1;
        const Vector u = xa * w;
        const Vector a_corr = s.x.transpose() * u;

        // step to the next entrant
        double gamma = big_c / aa;
        Index entrant = -1;
        const bool can_add = k < max_active;
        if (can_add) {
            for (Index j = 0; j < m; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (in_active[ju] || blocked[ju]) continue;
                for (double cand : {(big_c - c(j)) / (aa - a_corr(j)), (big_c + c(j)) / (aa + a_corr(j))}) {
                    if (!std::isfinite(cand) || cand <= eps) continue;
                    if (cand < gamma - eps * std::max(1.0, gamma)) {
                        gamma = cand;
                        entrant = j;
                    } else if (entrant >= 0 && std::abs(cand - gamma) <= eps * std::max(1.0, gamma) && j < entrant) {
                        entrant = j;
                    }
                }
            }
        }

        // lasso modification: a coefficient hitting zero leaves the active set
        double drop_gamma = std::numeric_limits<double>::infinity();
        Index drop_pos = -1;
        for (Index a = 0; a < k; ++a) {
            const Index j = active[static_cast<std::size_t>(a)];
            const double dir = sign(a) * w(a);
            if (dir == 0.0) continue;
            const double g = -beta(j) / dir;
            if (g > eps && g < drop_gamma) {
                drop_gamma = g;
                drop_pos = a;
            }
        }

        const bool dropping = drop_pos >= 0 && drop_gamma < gamma;
        const double move = dropping ? drop_gamma : gamma;
        mu += move * u;
        for (Index a = 0; a < k; ++a) beta(active[static_cast<std::size_t>(a)]) += move * sign(a) * w(a);

        if (dropping) {
            const Index j = active[static_cast<std::size_t>(drop_pos)];
            beta(j) = 0.0;
            in_active[static_cast<std::size_t>(j)] = false;
            active.erase(active.begin() + drop_pos);
            record(big_c - move * aa);
            continue;
        }
        record(big_c - move * aa);
        if (entrant < 0) break;  // reached the least-squares fit on the active set

        // reject an entrant that is (numerically) a combination of the active columns
        Matrix trial(n, k + 1);
        for (Index a = 0; a < k; ++a) trial.col(a) = s.x.col(active[static_cast<std::size_t>(a)]);
        trial.col(k) = s.x.col(entrant);
        Eigen::ColPivHouseholderQR<Matrix> qr(trial);
        qr.setThreshold(1e-10);
        if (qr.rank() <= k) {
            blocked[static_cast<std::size_t>(entrant)] = true;
            path.skipped.push_back(entrant);
            continue;
        }
        activate(entrant);
    }
    if (static_cast<Index>(path.entry_order.size()) > max_steps) {
        path.entry_order.resize(static_cast<std::size_t>(max_steps));
    }
    return path;
}

struct FirstP {
    std::vector<Index> indices;
    bool shortfall = false;
};

/// First p columns to enter the path.
inline FirstP select_first_p(const LarsPath& path, Index p) {
    if (p < 1) throw ParameterError("select_first_p: p must be positive");
    FirstP out;
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(p), path.entry_order.size());
    out.indices.assign(path.entry_order.begin(), path.entry_order.begin() + static_cast<std::ptrdiff_t>(take));
    out.shortfall = static_cast<Index>(take) < p;
    return out;
}

/// Binomial deviance of a logistic fit on the selected block; nullopt when
/// the fit did not converge (recorded as a gap in traces).
template <class Derived>
inline std::optional<double> selection_deviance(const Eigen::MatrixBase<Derived>& z_selected, const Labels& y) {
    const auto model = fit_logistic(z_selected, y);
    if (!model.converged) return std::nullopt;
    return model.deviance;
}

}  // namespace mass
