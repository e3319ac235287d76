#pragma once

// Reference lasso solver by cyclic coordinate descent, written without
// reference to the LARS code. Used to check LARS supports and coefficients.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

struct Standardized {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

/// Center columns and scale them to unit Euclidean norm; center y.
inline Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Standardized s;
    s.x = x.rowwise() - x.colwise().mean();
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) s.x.col(j) /= s.x.col(j).norm();
    s.y = y.array() - y.mean();
    return s;
}

inline double soft(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

/// argmin 0.5 * ||y - X b||^2 + lambda * ||b||_1 for unit-norm columns.
inline Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                                double tol = 1e-13, int max_sweeps = 200000) {
    const Eigen::Index d = x.cols();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd r = y;
    Eigen::VectorXd sq = x.colwise().squaredNorm().transpose();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double biggest = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const double old = b(j);
            const double rho = x.col(j).dot(r) + sq(j) * old;
            const double fresh = soft(rho, lambda) / sq(j);
            if (fresh != old) {
                r -= (fresh - old) * x.col(j);
                b(j) = fresh;
                biggest = std::max(biggest, std::abs(fresh - old));
            }
        }
        if (biggest < tol) break;
    }
    return b;
}

inline std::vector<Eigen::Index> support(const Eigen::VectorXd& b, double eps = 1e-9) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < b.size(); ++j)
        if (std::abs(b(j)) > eps) out.push_back(j);
    return out;
}

/// Size of the symmetric difference of two sorted index sets.
inline std::size_t set_distance(const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b) {
    std::size_t i = 0, j = 0, diff = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i] < b[j])) {
            ++diff;
            ++i;
        } else if (i == a.size() || b[j] < a[i]) {
            ++diff;
            ++j;
        } else {
            ++i;
            ++j;
        }
    }
    return diff;
}

}  // namespace oracle
