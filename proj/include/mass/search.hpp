#pragma once

#include "mass/classify.hpp"
#include "mass/numerics.hpp"
#include "mass/projection.hpp"
#include "mass/selection.hpp"
#include "mass/spline.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mass {

enum class SparsityPolicy { adaptive, fixed };
enum class SearchMode { linear, spline };

/// Settings for one MASS (adaptive) or MFSS (fixed sparsity) run.
/// Zero for l_start / l_end means "derive from the data": ceil(n/2) and 2p.
struct MassConfig {
    Index p = 5;
    int iterations = 500;
    double xi0 = 0.5;
    double alpha = 5.0;
    SearchMode mode = SearchMode::linear;
    double lambda = 0.0;
    int spline_df = kDefaultSplineDf;
    int curvature_grid = kDefaultCurvatureGrid;
    SparsityPolicy policy = SparsityPolicy::adaptive;
    Index l_start = 0;
    Index l_end = 0;
    std::uint64_t seed = 1;

    static MassConfig mfss(double xi, Index p) {
        MassConfig c;
        c.p = p;
        c.xi0 = xi;
        c.policy = SparsityPolicy::fixed;
        return c;
    }

    /// Copy with l_start / l_end resolved for n training rows.
    MassConfig resolved(Index n) const {
        MassConfig c = *this;
        if (c.l_start == 0) c.l_start = (n + 1) / 2;
        if (c.l_end == 0) c.l_end = 2 * c.p;
        return c;
    }

    void validate() const {
        if (p < 1) throw ParameterError("MassConfig: p must be positive");
        if (iterations < 1) throw ParameterError("MassConfig: iterations must be positive");
        if (!(alpha > 0.0)) throw ParameterError("MassConfig: alpha must be positive");
        if (!(xi0 >= 0.0 && xi0 < 1.0)) throw ParameterError("MassConfig: xi0 must lie in [0, 1)");
        if (!(lambda >= 0.0)) throw ParameterError("MassConfig: lambda must be non-negative");
        if (l_end != 0 && l_end <= p) throw ParameterError("MassConfig: L_end must exceed p");
        if (l_start != 0 && l_end != 0 && l_start < l_end) throw ParameterError("MassConfig: L_start must be >= L_end");
    }
};

/// Candidate-bank size at iteration `iter` (1-based): linear ramp from
/// l_start to l_end, rounded, never below p + 1.
inline Index l_schedule(int iter, const MassConfig& config) {
    if (iter < 1 || iter > config.iterations) throw ParameterError("l_schedule: iteration out of range");
    const double start = static_cast<double>(config.l_start);
    const double end = static_cast<double>(config.l_end);
    const double frac = config.iterations == 1 ? 0.0 : static_cast<double>(iter - 1) / (config.iterations - 1);
    const auto l = static_cast<Index>(std::lround(start + (end - start) * frac));
    return std::max(l, config.p + 1);
}

struct MassTraceRow {
    int iteration = 0;
    Index l = 0;
    double deviance = std::numeric_limits<double>::quiet_NaN();  // NaN: logistic fit did not converge
    double xi_bar = 0.0;
    std::optional<double> test_mcr;
    bool shortfall = false;
};

using MassTrace = std::vector<MassTraceRow>;

/// Sparsity level for the next candidate block.
inline double next_sparsity(const Matrix& selected, SparsityPolicy policy, double fixed_level) {
    if (policy == SparsityPolicy::fixed) return fixed_level;
    if (selected.size() == 0) throw ParameterError("next_sparsity: empty selection");
    return sparsity_of(selected);
}

struct MassResult {
    SearchMode mode = SearchMode::linear;
    Matrix a_final;                  // d x p, or (q*d) x p spline coefficients
    std::optional<NcsBasis> basis;   // spline mode only
    double lambda = 0.0;
    Matrix z_final;
    LogisticModel model;
    MassTrace trace;
    double final_sparsity = 0.0;

    ProjectionMatrix projection() const { return {a_final}; }
    SplineCoeffs spline_coeffs() const {
        if (!basis) throw ParameterError("MassResult: not a spline-mode result");
        return {a_final, lambda, *basis};
    }

    /// Maps new observations into the reduced space.
    Matrix transform(const Matrix& x) const {
        if (mode == SearchMode::spline) return project(expand_features(x, *basis), a_final);
        return project(x, a_final);
    }

    Labels predict(const Matrix& x) const { return predict_classes(model, transform(x)); }
};

struct EvalSet {
    const Matrix& x;
    const Labels& y;
};

/// Per-iteration hook: (iteration, selected columns of the bank). Iteration 0
/// is the initial all-fresh bank.
using MassObserver = std::function<void(int, const Matrix&)>;

namespace detail {

inline std::vector<Index> top_up_selection(const Matrix& z_bank, const Labels& y, std::vector<Index> chosen, Index p) {
    std::vector<bool> taken(static_cast<std::size_t>(z_bank.cols()), false);
    for (Index j : chosen) taken[static_cast<std::size_t>(j)] = true;
    const Vector yc = y.array() - y.mean();
    std::vector<std::pair<double, Index>> rest;
    for (Index j = 0; j < z_bank.cols(); ++j) {
        if (taken[static_cast<std::size_t>(j)]) continue;
        const Vector zc = z_bank.col(j).array() - z_bank.col(j).mean();
        const double nz = zc.norm();
        rest.emplace_back(nz > 0.0 ? std::abs(zc.dot(yc)) / nz : -1.0, j);
    }
    std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [score, j] : rest) {
        if (static_cast<Index>(chosen.size()) >= p) break;
        chosen.push_back(j);
    }
    return chosen;
}

}  // namespace detail

/// Runs the adaptive (or fixed-sparsity) stochastic search for a p-column
/// transformation and fits the logistic classifier on the final reduced data.
///
/// Each iteration projects the training data through a bank of L candidate
/// directions (the p kept columns followed by L - p fresh ones), keeps the
/// first p directions to enter a LARS path on the 0/1 labels and, in adaptive
/// mode, sets the next sparsity target to the zero fraction of the kept
/// columns. The optional test set only feeds the trace.
inline MassResult run_mass(const Matrix& x, const Labels& y, const MassConfig& raw_config,
                           std::optional<EvalSet> eval = std::nullopt, const MassObserver& observer = {}) {
    if (x.rows() != y.size()) throw ShapeError("run_mass: " + shape_of(x) + " data with " + std::to_string(y.size()) + " labels");
    if (!x.allFinite()) throw ParameterError("run_mass: non-finite predictor values");
    raw_config.validate();
    const MassConfig config = raw_config.resolved(x.rows());
    config.validate();
    if (config.l_start <= config.p) throw ParameterError("run_mass: L_start must exceed p");

    RngStream rng(config.seed);
    MassResult result;
    result.mode = config.mode;
    result.lambda = config.lambda;

    Matrix work = x;
    Matrix work_test;
    std::optional<CurvatureOperator> op;
    if (config.mode == SearchMode::spline) {
        result.basis = build_ncs_basis_for(x, config.spline_df);
        op = curvature_gram(*result.basis, config.curvature_grid);
        work = expand_features(x, *result.basis);
        if (eval) work_test = expand_features(eval->x, *result.basis);
    } else if (eval) {
        work_test = eval->x;
    }
    const Index d = x.cols();

    SparsitySpec spec;
    spec.alpha = config.alpha;
    spec.target = config.xi0;
    spec.dense_at_zero = config.policy == SparsityPolicy::fixed;

    auto fresh = [&](Index count) -> Matrix {
        if (config.mode == SearchMode::spline) return gen_spline_columns(d, count, spec, config.lambda, *op, rng);
        return gen_candidate_columns(d, count, spec, rng);
    };

    auto select = [&](const Matrix& bank, bool& shortfall) -> Matrix {
        const Matrix z_bank = work * bank;
        const auto path = lars_path(z_bank, y, config.p);
        auto first = select_first_p(path, config.p);
        shortfall = first.shortfall;
        auto chosen = first.indices;
        if (shortfall) chosen = detail::top_up_selection(z_bank, y, std::move(chosen), config.p);
        Matrix kept(bank.rows(), static_cast<Index>(chosen.size()));
        for (std::size_t j = 0; j < chosen.size(); ++j) kept.col(static_cast<Index>(j)) = bank.col(chosen[j]);
        return kept;
    };

    bool shortfall = false;
    Matrix kept = select(fresh(config.l_start), shortfall);
    if (observer) observer(0, kept);
    spec.target = next_sparsity(kept, config.policy, config.xi0);

    result.trace.reserve(static_cast<std::size_t>(config.iterations));
    Matrix bank;
    for (int iter = 1; iter <= config.iterations; ++iter) {
        const Index l = l_schedule(iter, config);
        bank.resize(kept.rows(), l);
        bank.leftCols(kept.cols()) = kept;
        bank.rightCols(l - kept.cols()) = fresh(l - kept.cols());
        kept = select(bank, shortfall);
        spec.target = next_sparsity(kept, config.policy, config.xi0);
        if (observer) observer(iter, kept);

        MassTraceRow row;
        row.iteration = iter;
        row.l = l;
        row.xi_bar = spec.target;
        row.shortfall = shortfall;
        const Matrix z = work * kept;
        const auto fit = fit_logistic(z, y);
        if (fit.converged) row.deviance = fit.deviance;
        if (eval) row.test_mcr = mcr(predict_classes(fit, work_test * kept), eval->y);
        result.trace.push_back(row);
    }

    result.a_final = kept;
    result.z_final = work * kept;
    result.model = fit_logistic(result.z_final, y);
    result.final_sparsity = sparsity_of(kept);
    return result;
}

}  // namespace mass
