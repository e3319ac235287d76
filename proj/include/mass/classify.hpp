#pragma once

#include "mass/numerics.hpp"

#include <cmath>

namespace mass {

inline constexpr double kRidgeFloor = 1e-8;
inline constexpr int kIrlsMaxIter = 100;
inline constexpr double kIrlsTol = 1e-10;

/// Logistic regression fit. coef(0) is the intercept.
struct LogisticModel {
    Vector coef;
    bool converged = false;
    double deviance = 0.0;
    double ridge_floor = kRidgeFloor;
    int iterations = 0;

    Index dim() const { return coef.size() - 1; }

    template <class Derived>
    Vector linear_predictor(const Eigen::MatrixBase<Derived>& z) const {
        if (z.cols() != dim()) {
            throw ShapeError("LogisticModel: model has " + std::to_string(dim()) + " slopes, data is " + shape_of(z));
        }
        return (z * coef.tail(dim())).array() + coef(0);
    }

    template <class Derived>
    Vector predict_proba(const Eigen::MatrixBase<Derived>& z) const {
        return linear_predictor(z).unaryExpr([](double eta) { return 1.0 / (1.0 + std::exp(-eta)); });
    }
};

namespace detail {

/// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double binomial_deviance(const Vector& eta, const Labels& y) {
    double dev = 0.0;
    for (Index i = 0; i < eta.size(); ++i) dev += log1pexp(eta(i)) - y(i) * eta(i);
    return 2.0 * dev;
}

}  // namespace detail

/// IRLS with step-halving. A ridge floor on the slopes keeps the Newton
/// system solvable and the optimum finite on separable data.
template <class Derived>
inline LogisticModel fit_logistic(const Eigen::MatrixBase<Derived>& z, const Labels& y, double ridge = kRidgeFloor) {
    const Index n = z.rows();
    const Index p = z.cols();
    if (y.size() != n) throw ShapeError("fit_logistic: " + shape_of(z) + " data with " + std::to_string(y.size()) + " labels");
    if (n == 0) throw ParameterError("fit_logistic: empty data");

    Matrix design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = z;

    auto objective = [&](const Vector& beta, double dev) {
        return 0.5 * dev + 0.5 * ridge * beta.tail(p).squaredNorm();
    };

    LogisticModel model;
    model.ridge_floor = ridge;
    model.coef = Vector::Zero(p + 1);
    Vector eta = Vector::Zero(n);
    model.deviance = detail::binomial_deviance(eta, y);
    double obj = objective(model.coef, model.deviance);

    Vector mu(n), w(n);
    Matrix hessian(p + 1, p + 1);
    for (int it = 1; it <= kIrlsMaxIter; ++it) {
        model.iterations = it;
        for (Index i = 0; i < n; ++i) {
            mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
            w(i) = mu(i) * (1.0 - mu(i));
        }
        Vector grad = design.transpose() * (y - mu);
        grad.tail(p) -= ridge * model.coef.tail(p);
        hessian.noalias() = design.transpose() * w.asDiagonal() * design;
        hessian.diagonal().tail(p).array() += ridge;
        hessian(0, 0) += ridge;
        const Vector step = hessian.ldlt().solve(grad);
        if (!step.allFinite()) break;

        double scale = 1.0;
        bool accepted = false;
        Vector trial_coef, trial_eta;
        double trial_dev = 0.0, trial_obj = 0.0;
        for (int half = 0; half < 40; ++half, scale *= 0.5) {
            trial_coef = model.coef + scale * step;
            trial_eta = design * trial_coef;
            trial_dev = detail::binomial_deviance(trial_eta, y);
            trial_obj = objective(trial_coef, trial_dev);
            if (std::isfinite(trial_obj) && trial_obj <= obj && trial_dev <= model.deviance) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // no descent direction left at machine precision
            model.converged = true;
            break;
        }
        const double rel = (obj - trial_obj) / std::max(std::abs(obj), 1e-300);
        model.coef = trial_coef;
        eta = trial_eta;
        model.deviance = trial_dev;
        obj = trial_obj;
        if (rel < kIrlsTol) {
            model.converged = true;
            break;
        }
    }
    return model;
}

/// Threshold at probability 0.5; ties go to class 1.
template <class Derived>
inline Labels predict_classes(const LogisticModel& model, const Eigen::MatrixBase<Derived>& z) {
    return model.linear_predictor(z).unaryExpr([](double eta) { return eta >= 0.0 ? 1.0 : 0.0; });
}

/// Fraction of mismatched labels.
inline double mcr(const Labels& pred, const Labels& truth) {
    if (pred.size() != truth.size()) {
        throw ShapeError("mcr: " + std::to_string(pred.size()) + " predictions vs " + std::to_string(truth.size()) +
                         " labels");
    }
    if (pred.size() == 0) throw ParameterError("mcr: empty input");
    return static_cast<double>((pred.array() != truth.array()).count()) / static_cast<double>(pred.size());
}

}  // namespace mass
