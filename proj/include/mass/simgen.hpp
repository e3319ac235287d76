#pragma once

#include "mass/classify.hpp"
#include "mass/numerics.hpp"
#include "mass/projection.hpp"
#include "mass/spline.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace mass {

enum class LinkKind { logit, sine_logit };

/// P(y = 1 | z) = logistic(eta) with eta = z^T beta (logit) or
/// eta = sin(omega z)^T beta (sine_logit).
struct LinkSpec {
    LinkKind kind = LinkKind::logit;
    double omega = 0.0;
    Vector beta;

    double eta(const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
        if (z.size() != beta.size()) throw ShapeError("LinkSpec: row has " + std::to_string(z.size()) + " entries, beta has " + std::to_string(beta.size()));
        if (kind == LinkKind::logit) return z.dot(beta.transpose());
        double acc = 0.0;
        for (Index j = 0; j < z.size(); ++j) acc += std::sin(omega * z(j)) * beta(j);
        return acc;
    }

    Vector probabilities(const Matrix& z0) const {
        if (kind == LinkKind::sine_logit && !(omega > 0.0)) throw ParameterError("LinkSpec: sine link needs omega > 0");
        Vector p(z0.rows());
        for (Index i = 0; i < z0.rows(); ++i) p(i) = 1.0 / (1.0 + std::exp(-eta(z0.row(i))));
        return p;
    }
};

/// y_i ~ Bernoulli(P(y=1 | z0_i)).
inline Labels logistic_labels(const Matrix& z0, const LinkSpec& spec, RngStream& rng) {
    const Vector prob = spec.probabilities(z0);
    Labels y(prob.size());
    for (Index i = 0; i < prob.size(); ++i) y(i) = rng.uniform() < prob(i) ? 1.0 : 0.0;
    return y;
}

enum class Study { I, II1, II2, III, IV, V };

inline std::string to_string(Study s) {
    switch (s) {
        case Study::I: return "I";
        case Study::II1: return "II1";
        case Study::II2: return "II2";
        case Study::III: return "III";
        case Study::IV: return "IV";
        case Study::V: return "V";
    }
    return "?";
}

inline Study parse_study(const std::string& tag) {
    if (tag == "I") return Study::I;
    if (tag == "II1") return Study::II1;
    if (tag == "II2") return Study::II2;
    if (tag == "III") return Study::III;
    if (tag == "IV") return Study::IV;
    if (tag == "V") return Study::V;
    throw ParameterError("unknown study tag '" + tag + "' (expected I, II1, II2, III, IV or V)");
}

struct StudySpec {
    Study study = Study::II1;
    double lambda0 = 5.0;  // study I curvature budget
    double xi0 = 0.3;      // study I sparsity
};

struct SimSizes {
    Index n_train = 100;
    Index n_test = 1000;
    Index d = 0;  // 0: 50 for studies I-IV, 1000 for study V

    Index dims(Study s) const { return d > 0 ? d : (s == Study::V ? 1000 : 50); }
};

/// Generating truth retained alongside a simulated dataset.
struct SimTruth {
    Matrix z0_train;
    Matrix z0_test;
    LinkSpec link;
    Matrix a0;                       // linear studies: d x p0
    Matrix theta0;                   // study I: (q*d) x p0
    std::optional<NcsBasis> basis;   // study I
    Index p0 = 0;
    double lambda0 = 0.0;
    double xi0 = 0.0;
};

struct SimDataset {
    Study study = Study::II1;
    Matrix x_train;
    Labels y_train;
    Matrix x_test;
    Labels y_test;
    std::optional<SimTruth> truth;
    std::size_t clamp_count = 0;
};

/// MCR of the rule that thresholds the true P(y=1|z0) at 0.5.
inline double bayes_rate(const Matrix& z0, const LinkSpec& link, const Labels& y) {
    const Vector prob = link.probabilities(z0);
    const Labels pred = prob.unaryExpr([](double p) { return p >= 0.5 ? 1.0 : 0.0; });
    return mcr(pred, y);
}

/// Bayes rate on the test split of a simulated dataset.
inline double bayes_rate_estimate(const SimDataset& data) {
    if (!data.truth) throw ParameterError("bayes_rate_estimate: dataset carries no generating truth");
    return bayes_rate(data.truth->z0_test, data.truth->link, data.y_test);
}

inline constexpr double kStudy1Domain = 3.0;
inline constexpr double kCalibratedBayesLo = 0.05;
inline constexpr double kCalibratedBayesHi = 0.25;
inline constexpr int kCalibrationAttempts = 500;
/// Half-widths of the uniform coefficient draws, scaled so the expected Bayes
/// rates sit near 0.11 (both study II scenarios), 0.08 (III) and 0.07 (IV).
inline constexpr double kStudy2Scenario1BetaHalfWidth = 0.4;
inline constexpr double kStudy2Scenario2BetaHalfWidth = 4.0;
inline constexpr double kStudy3BetaHalfWidth = 8.0;
inline constexpr double kStudy4BetaHalfWidth = 36.0;

namespace detail {

inline Vector uniform_vector(Index n, double lo, double hi, RngStream& rng) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

inline Matrix gaussian_matrix(Index rows, Index cols, RngStream& rng) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

inline void split_rows(const Matrix& all, Index n_train, Matrix& train, Matrix& test) {
    train = all.topRows(n_train);
    test = all.bottomRows(all.rows() - n_train);
}

/// Draws labels for fixed link; redraws beta ~ U(-2, 2) until the realized
/// test Bayes rate lands in the calibration window.
inline void calibrated_labels(SimDataset& data, RngStream& rng) {
    auto& truth = *data.truth;
    for (int attempt = 0; attempt < kCalibrationAttempts; ++attempt) {
        truth.link.beta = uniform_vector(truth.p0, -2.0, 2.0, rng);
        data.y_train = logistic_labels(truth.z0_train, truth.link, rng);
        data.y_test = logistic_labels(truth.z0_test, truth.link, rng);
        const double bayes = bayes_rate(truth.z0_test, truth.link, data.y_test);
        if (bayes >= kCalibratedBayesLo && bayes <= kCalibratedBayesHi) return;
    }
    throw NumericalError("gen_sim: could not calibrate coefficients for study " + to_string(data.study));
}

}  // namespace detail

/// One training/test pair for a simulation study, generated jointly from a
/// single stream.
inline SimDataset gen_sim(const StudySpec& spec, const SimSizes& sizes, RngStream& rng) {
    const Study study = spec.study;
    const Index d = sizes.dims(study);
    const Index n_all = sizes.n_train + sizes.n_test;
    if (sizes.n_train < 2 || sizes.n_test < 1) throw ParameterError("gen_sim: need at least 2 training and 1 test rows");

    SimDataset data;
    data.study = study;
    data.truth.emplace();
    auto& truth = *data.truth;

    Matrix x_all;
    Matrix z_all;
    switch (study) {
        case Study::I: {
            if (!(spec.lambda0 >= 0.0)) throw ParameterError("gen_sim: lambda0 must be non-negative");
            x_all = sample_mvnormal(n_all, d, 1.0, 0.0, rng);
            truth.p0 = 2;
            truth.lambda0 = spec.lambda0;
            truth.xi0 = spec.xi0;
            truth.basis = build_ncs_basis(-kStudy1Domain, kStudy1Domain, kDefaultSplineDf);
            const auto op = curvature_gram(*truth.basis);
            SparsitySpec sp;
            sp.target = spec.xi0;
            truth.theta0 = gen_spline_columns(d, truth.p0, sp, spec.lambda0, op, rng);
            z_all = expand_features(x_all, *truth.basis) * truth.theta0;
            truth.link.kind = LinkKind::logit;
            break;
        }
        case Study::II1:
        case Study::II2: {
            if (d < 10) throw ParameterError("gen_sim: study II needs d >= 10");
            x_all = sample_mvnormal(n_all, d, 1.0, 0.5, rng);
            truth.p0 = 5;
            x_all.leftCols(truth.p0) *= 10.0;
            truth.a0 = Matrix::Zero(d, truth.p0);
            const Index offset = study == Study::II1 ? 0 : truth.p0;  // major columns vs. minor columns
            for (Index j = 0; j < truth.p0; ++j) truth.a0(offset + j, j) = 1.0;
            truth.xi0 = sparsity_of(truth.a0);
            truth.link.kind = LinkKind::logit;
            const double half = study == Study::II1 ? kStudy2Scenario1BetaHalfWidth : kStudy2Scenario2BetaHalfWidth;
            truth.link.beta = detail::uniform_vector(truth.p0, -half, half, rng);
            z_all = x_all * truth.a0;
            break;
        }
        case Study::III:
        case Study::IV: {
            truth.p0 = 5;
            if (study == Study::III) {
                x_all = sample_mvnormal(n_all, d, 1.0, 0.5, rng);
            } else {
                auto gh = sample_gh(n_all, d, 0.5, 0.5, 0.5, rng);
                x_all = std::move(gh.values);
                data.clamp_count = gh.clamp_count;
            }
            truth.a0 = detail::gaussian_matrix(d, truth.p0, rng);
            truth.link.kind = LinkKind::sine_logit;
            truth.link.omega = study == Study::III ? 0.05 * std::numbers::pi : 0.005 * std::numbers::pi;
            const double half = study == Study::III ? kStudy3BetaHalfWidth : kStudy4BetaHalfWidth;
            truth.link.beta = detail::uniform_vector(truth.p0, -half, half, rng);
            z_all = x_all * truth.a0;
            break;
        }
        case Study::V: {
            const Index informative = 50;
            if (d <= informative) throw ParameterError("gen_sim: study V needs d > 50");
            truth.p0 = 5;
            x_all.resize(n_all, d);
            x_all.leftCols(informative) = sample_mvnormal(n_all, informative, 1.0, 0.5, rng);
            x_all.rightCols(d - informative) = sample_mvnormal(n_all, d - informative, 0.5, 0.0, rng);
            truth.a0 = Matrix::Zero(d, truth.p0);
            truth.a0.topRows(informative) = detail::gaussian_matrix(informative, truth.p0, rng);
            truth.link.kind = LinkKind::sine_logit;
            truth.link.omega = 0.05 * std::numbers::pi;
            z_all = x_all.leftCols(informative) * truth.a0.topRows(informative);
            break;
        }
    }

    detail::split_rows(x_all, sizes.n_train, data.x_train, data.x_test);
    detail::split_rows(z_all, sizes.n_train, truth.z0_train, truth.z0_test);

    if (study == Study::I || study == Study::V) {
        detail::calibrated_labels(data, rng);
    } else {
        data.y_train = logistic_labels(truth.z0_train, truth.link, rng);
        data.y_test = logistic_labels(truth.z0_test, truth.link, rng);
    }
    return data;
}

}  // namespace mass
