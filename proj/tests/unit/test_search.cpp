#include "mass/search.hpp"
#include "mass/simgen.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace mass;

namespace {

SimDataset study2(std::uint64_t seed, Study s = Study::II1) {
    StudySpec spec;
    spec.study = s;
    RngStream rng(seed);
    return gen_sim(spec, SimSizes{}, rng);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(LSchedule, EndpointsAndMidpoint) {
    MassConfig c;
    c.p = 5;
    c.iterations = 500;
    c.l_start = 50;
    c.l_end = 10;
    EXPECT_EQ(l_schedule(1, c), 50);
    EXPECT_EQ(l_schedule(500, c), 10);
    EXPECT_NEAR(static_cast<double>(l_schedule(250, c)), 30.0, 1.0);
    for (int it = 2; it <= 500; ++it) EXPECT_LE(l_schedule(it, c), l_schedule(it - 1, c));
    EXPECT_THROW(l_schedule(0, c), ParameterError);
    EXPECT_THROW(l_schedule(501, c), ParameterError);
}

TEST(LSchedule, NeverBelowPPlusOne) {
    MassConfig c;
    c.p = 5;
    c.iterations = 10;
    c.l_start = 8;
    c.l_end = 6;
    for (int it = 1; it <= 10; ++it) EXPECT_GE(l_schedule(it, c), 6);
}

TEST(MassConfig, ResolvedDefaults) {
    MassConfig c;
    c.p = 4;
    const auto r = c.resolved(101);
    EXPECT_EQ(r.l_start, 51);
    EXPECT_EQ(r.l_end, 8);
    MassConfig bad;
    bad.p = 5;
    bad.l_end = 5;
    EXPECT_THROW(bad.validate(), ParameterError);
    bad.l_end = 10;
    bad.l_start = 8;
    EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(NextSparsity, Policies) {
    Matrix sel = Matrix::Zero(50, 5);
    for (Index j = 0; j < 5; ++j) sel(j, j) = 1.0;
    EXPECT_DOUBLE_EQ(next_sparsity(sel, SparsityPolicy::adaptive, 0.5), 0.98);
    EXPECT_DOUBLE_EQ(next_sparsity(Matrix::Ones(10, 3), SparsityPolicy::adaptive, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(next_sparsity(sel, SparsityPolicy::fixed, 0.3), 0.3);
}

TEST(RunMass, DeterministicForFixedSeed) {
    const auto data = study2(1);
    MassConfig c;
    c.iterations = 40;
    c.seed = 17;
    const auto a = run_mass(data.x_train, data.y_train, c);
    const auto b = run_mass(data.x_train, data.y_train, c);
    EXPECT_EQ(a.a_final, b.a_final);
    EXPECT_EQ(a.model.coef, b.model.coef);
    c.seed = 18;
    EXPECT_NE(run_mass(data.x_train, data.y_train, c).a_final, a.a_final);
}

TEST(RunMass, ShapesTraceAndUnitColumns) {
    const auto data = study2(2);
    MassConfig c;
    c.iterations = 30;
    const auto res = run_mass(data.x_train, data.y_train, c);
    EXPECT_EQ(res.a_final.rows(), 50);
    EXPECT_EQ(res.a_final.cols(), 5);
    for (Index j = 0; j < 5; ++j) EXPECT_NEAR(res.a_final.col(j).norm(), 1.0, 1e-12);
    EXPECT_EQ(res.z_final, data.x_train * res.a_final);
    ASSERT_EQ(res.trace.size(), 30u);
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        EXPECT_EQ(res.trace[i].iteration, static_cast<int>(i) + 1);
        EXPECT_GE(res.trace[i].xi_bar, 0.0);
        EXPECT_LE(res.trace[i].xi_bar, 1.0);
        EXPECT_FALSE(res.trace[i].test_mcr.has_value());
    }
    EXPECT_EQ(res.trace.front().l, 50);
    EXPECT_EQ(res.trace.back().l, 10);
}

TEST(RunMass, KeptColumnsComeFromTheBank) {
    const auto data = study2(3);
    MassConfig c;
    c.iterations = 25;
    std::vector<Matrix> kept;
    run_mass(data.x_train, data.y_train, c, std::nullopt, [&](int, const Matrix& sel) { kept.push_back(sel); });
    ASSERT_EQ(kept.size(), 26u);
    // every column carried into iteration l+1 either survives or is replaced by a fresh one;
    // a surviving column is bit-identical to its previous value
    for (std::size_t l = 1; l < kept.size(); ++l) {
        for (Index j = 0; j < kept[l].cols(); ++j) {
            bool old = false;
            for (Index k = 0; k < kept[l - 1].cols(); ++k) old = old || kept[l].col(j) == kept[l - 1].col(k);
            if (old) continue;
            EXPECT_NEAR(kept[l].col(j).norm(), 1.0, 1e-12);
        }
    }
}

TEST(RunMass, FixedPolicyHoldsSparsity) {
    const auto data = study2(4);
    auto c = MassConfig::mfss(0.3, 5);
    c.iterations = 20;
    const auto res = run_mass(data.x_train, data.y_train, c);
    for (const auto& row : res.trace) EXPECT_EQ(row.xi_bar, 0.3);
}

TEST(RunMass, TestTracingNeverChangesSelection) {
    const auto data = study2(5);
    MassConfig c;
    c.iterations = 30;
    const auto plain = run_mass(data.x_train, data.y_train, c);
    const auto traced = run_mass(data.x_train, data.y_train, c, EvalSet{data.x_test, data.y_test});
    EXPECT_EQ(plain.a_final, traced.a_final);
    for (const auto& row : traced.trace) EXPECT_TRUE(row.test_mcr.has_value());
}

TEST(RunMass, PlantedMajorColumnsBeatFullDimension) {
    const auto data = study2(6);
    MassConfig c;
    c.iterations = 200;
    const auto res = run_mass(data.x_train, data.y_train, c);
    const double mass_train = mcr(predict_classes(res.model, res.z_final), data.y_train);
    const auto fd = fit_logistic(data.x_train, data.y_train);
    const double fd_test = mcr(predict_classes(fd, data.x_test), data.y_test);
    EXPECT_LT(mass_train, fd_test);
}

TEST(RunMass, SplineModeZeroBudgetIsLinearInInputs) {
    const auto data = study2(7);
    MassConfig c;
    c.iterations = 20;
    c.mode = SearchMode::spline;
    c.lambda = 0.0;
    const auto res = run_mass(data.x_train, data.y_train, c);
    ASSERT_TRUE(res.basis);
    EXPECT_EQ(res.a_final.rows(), 6 * 50);
    // with lambda = 0 every component function is linear inside the basis domain
    const auto coeffs = res.spline_coeffs();
    for (Index j = 0; j < coeffs.theta.cols(); ++j) {
        for (Index k = 0; k < 50; ++k) {
            const Vector block = coeffs.theta.col(j).segment(k * 6, 6);
            EXPECT_LT(curvature_quadrature(coeffs.basis, block), 1e-16);
        }
    }
}

TEST(RunMass, SplineModeRespectsBudget) {
    StudySpec spec;
    spec.study = Study::I;
    RngStream rng(8);
    const auto data = gen_sim(spec, SimSizes{}, rng);
    MassConfig c;
    c.p = 2;
    c.iterations = 15;
    c.mode = SearchMode::spline;
    c.lambda = 5.0;
    const auto res = run_mass(data.x_train, data.y_train, c);
    const auto coeffs = res.spline_coeffs();
    for (Index j = 0; j < coeffs.theta.cols(); ++j) {
        for (Index k = 0; k < 50; ++k) {
            const Vector block = coeffs.theta.col(j).segment(k * 6, 6);
            if (block.isZero(0.0)) continue;
            EXPECT_LE(curvature_quadrature(coeffs.basis, block), 5.0 * (1 + 1e-6));
        }
    }
    EXPECT_EQ(res.transform(data.x_test).cols(), 2);
}

TEST(RunMass, RejectsBadInput) {
    const auto data = study2(9);
    MassConfig c;
    EXPECT_THROW(run_mass(data.x_train, Labels(data.y_train.head(10)), c), ShapeError);
    Matrix x = data.x_train;
    x(0, 0) = std::nan("");
    EXPECT_THROW(run_mass(x, data.y_train, c), ParameterError);
    c.p = 60;  // L_start = 50 cannot exceed p
    EXPECT_THROW(run_mass(data.x_train, data.y_train, c), ParameterError);
}

TEST(RunMass, TopUpFillsShortfall) {
    // two informative columns and many duplicates force a LARS shortfall
    RngStream rng(10);
    Matrix z(20, 6);
    for (Index i = 0; i < 20; ++i) z(i, 0) = rng.normal();
    for (Index j = 1; j < 6; ++j) z.col(j) = z.col(0) * (j + 1.0);
    Labels y(20);
    for (Index i = 0; i < 20; ++i) y(i) = z(i, 0) > 0;
    const auto chosen = detail::top_up_selection(z, y, {0}, 3);
    EXPECT_EQ(chosen.size(), 3u);
    EXPECT_EQ(chosen.front(), 0);
}

TEST(RunMassTrends, StudyTwoDevianceDecreases) {
    const int seeds = 20;
    std::vector<double> first, last;
    for (int s = 0; s < seeds; ++s) {
        MassConfig c;
        c.iterations = 150;
        c.seed = 100 + s;
        const auto d2 = study2(200 + s);
        const auto r2 = run_mass(d2.x_train, d2.y_train, c);
        first.push_back(r2.trace.front().deviance);
        last.push_back(r2.trace.back().deviance);
    }
    EXPECT_LE(median(last), median(first));
}
