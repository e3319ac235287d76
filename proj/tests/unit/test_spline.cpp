#include "mass/spline.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mass;

TEST(NcsBasis, RejectsSmallQAndBadDomain) {
    EXPECT_THROW(build_ncs_basis(-1, 1, 2), ParameterError);
    EXPECT_THROW(build_ncs_basis(1, 1, 5), ParameterError);
    EXPECT_NO_THROW(build_ncs_basis(-1, 1, 3));
}

TEST(NcsBasis, KnotsIncreaseInsideDomain) {
    const auto b = build_ncs_basis(-3, 3, 6);
    ASSERT_GE(b.knots().size(), 2u);
    EXPECT_DOUBLE_EQ(b.knots().front(), -3.0);
    EXPECT_DOUBLE_EQ(b.knots().back(), 3.0);
    for (std::size_t i = 1; i < b.knots().size(); ++i) EXPECT_GT(b.knots()[i], b.knots()[i - 1]);
}

TEST(NcsBasis, VanishesAtZero) {
    for (auto [lo, hi] : {std::pair{-3.0, 3.0}, {-1.0, 4.0}, {0.5, 2.0}}) {
        const auto b = build_ncs_basis(lo, hi, 6);
        // for domains excluding 0 the shift is taken at the clamped point
        EXPECT_LT(b.values(b.clamp(0.0)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(NcsBasis, LinearBeyondBoundaryKnots) {
    const auto b = build_ncs_basis(-3, 3, 6);
    for (double t : {-10.0, -3.5, 3.01, 7.0}) EXPECT_EQ(b.second_derivatives(t), Vector::Zero(6)) << t;
    // natural condition: f'' at the boundary knots is zero
    EXPECT_LT(b.second_derivatives(-3.0).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(b.second_derivatives(3.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NcsBasis, SecondDerivativeMatchesFiniteDifference) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const double h = 1e-4;
    for (double t : {-2.2, -0.7, 0.3, 1.9, 2.6}) {
        const Vector fd = (b.values(t + h) - 2.0 * b.values(t) + b.values(t - h)) / (h * h);
        EXPECT_LT((fd - b.second_derivatives(t)).cwiseAbs().maxCoeff(), 1e-4) << t;
    }
}

TEST(NcsBasis, EvaluationMatrixHasFullRank) {
    const auto b = build_ncs_basis(-3, 3, 6);
    Matrix m(100, 6);
    for (int i = 0; i < 100; ++i) m.row(i) = b.values(-3.0 + 6.0 * i / 99.0).transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(m);
    EXPECT_EQ(qr.rank(), 6);
}

TEST(NcsBasis, ClampIsIdempotent) {
    const auto b = build_ncs_basis(-1, 1, 4);
    for (double t : {-5.0, -1.0, 0.2, 1.0, 9.0}) {
        EXPECT_EQ(b.clamp(b.clamp(t)), b.clamp(t));
        EXPECT_EQ(b.values(t), b.values(b.clamp(t)));
    }
}

TEST(CurvatureGram, SymmetricPsdWithOneNullDirection) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto op = curvature_gram(b);
    EXPECT_LT((op.gram - op.gram.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(op.d(5), 0.0);
    EXPECT_GT(op.d(4), 0.0);
    Matrix rebuilt = op.u * op.d.asDiagonal() * op.u.transpose();
    EXPECT_LT((rebuilt - op.gram).cwiseAbs().maxCoeff(), 1e-8 * op.d(0));
    EXPECT_LT((op.u.transpose() * op.u - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CurvatureGram, NullDirectionIsLinear) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto op = curvature_gram(b);
    const Vector theta = op.u.col(5);
    double worst = 0.0;
    for (double t : curvature_grid(b, 200)) worst = std::max(worst, std::abs(b.second_derivatives(t).dot(theta)));
    EXPECT_LT(worst, 1e-8);
    EXPECT_GT(std::abs(op.upsilon), 0.0);
    // the null function is exactly upsilon * t
    for (double t : {-2.5, 0.0, 1.3}) EXPECT_NEAR(b.values(t).dot(theta), op.upsilon * t, 1e-10);
}

TEST(CurvatureGram, ConvergesInGridSize) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto g200 = curvature_gram(b, 200).gram;
    const auto g400 = curvature_gram(b, 400).gram;
    EXPECT_LT((g200 - g400).cwiseAbs().maxCoeff() / g400.cwiseAbs().maxCoeff(), 0.01);
}

TEST(CurvatureGram, NeedsEnoughGridPoints) {
    EXPECT_THROW(curvature_gram(build_ncs_basis(-3, 3, 6), 59), ParameterError);
}

namespace {

Vector random_column(Index d, int q, RngStream& rng, double keep = 0.7) {
    Vector v = Vector::Zero(d * q);
    for (Index k = 0; k < d; ++k) {
        if (!rng.bernoulli(keep)) continue;
        for (int i = 0; i < q; ++i) v(k * q + i) = rng.normal();
    }
    return v;
}

}  // namespace

TEST(ConstrainAndStandardize, CurvatureHitsBudget) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto op = curvature_gram(b);
    RngStream rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const Vector raw = random_column(8, 6, rng);
        const auto out = constrain_and_standardize(raw, 5.0, op);
        if (!out) continue;
        for (Index k = 0; k < 8; ++k) {
            const Vector block = out->segment(k * 6, 6);
            if (block.isZero(0.0)) continue;
            EXPECT_NEAR(curvature_quadrature(b, block), 5.0, 5e-4);
        }
    }
}

TEST(ConstrainAndStandardize, ZeroBudgetIsLinear) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto op = curvature_gram(b);
    RngStream rng(6);
    const auto out = constrain_and_standardize(random_column(5, 6, rng, 1.0), 0.0, op);
    ASSERT_TRUE(out);
    for (Index k = 0; k < 5; ++k) {
        const Vector block = out->segment(k * 6, 6);
        for (double t : curvature_grid(b, 200)) EXPECT_LT(std::abs(b.second_derivatives(t).dot(block)), 1e-8);
    }
}

TEST(ConstrainAndStandardize, SlopesStandardized) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto op = curvature_gram(b);
    RngStream rng(7);
    for (double lambda : {0.0, 1.0, 5.0}) {
        const auto out = constrain_and_standardize(random_column(10, 6, rng), lambda, op);
        ASSERT_TRUE(out);
        double ss = 0.0;
        for (Index k = 0; k < 10; ++k) {
            const double slope = op.u.col(5).dot(out->segment(k * 6, 6));
            ss += op.upsilon * op.upsilon * slope * slope;
        }
        EXPECT_NEAR(ss, 1.0, 1e-8);
    }
}

TEST(ConstrainAndStandardize, MaskedBlocksStayZero) {
    const auto op = curvature_gram(build_ncs_basis(-3, 3, 6));
    Vector raw = Vector::Zero(18);
    RngStream rng(8);
    for (int i = 6; i < 12; ++i) raw(i) = rng.normal();
    const auto out = constrain_and_standardize(raw, 5.0, op);
    ASSERT_TRUE(out);
    EXPECT_TRUE(out->head(6).isZero(0.0));
    EXPECT_TRUE(out->tail(6).isZero(0.0));
}

TEST(ConstrainAndStandardize, AllSlopesZeroSignalsRedraw) {
    const auto op = curvature_gram(build_ncs_basis(-3, 3, 6));
    Vector raw = Vector::Zero(12);
    raw.head(6) = op.u.col(0);  // pure curvature, no slope component
    EXPECT_FALSE(constrain_and_standardize(raw, 5.0, op).has_value());
}

TEST(GenSplineColumns, BlockSparsityAndConstraint) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto op = curvature_gram(b);
    SparsitySpec spec;
    spec.target = 0.3;
    RngStream rng(11);
    const Matrix theta = gen_spline_columns(400, 20, spec, 5.0, op, rng);
    ASSERT_EQ(theta.rows(), 2400);
    ASSERT_EQ(theta.cols(), 20);
    Index zero_blocks = 0;
    for (Index j = 0; j < 20; ++j) {
        for (Index k = 0; k < 400; ++k) {
            const Vector block = theta.col(j).segment(k * 6, 6);
            if (block.isZero(0.0)) {
                ++zero_blocks;
                continue;
            }
            EXPECT_EQ((block.array() == 0.0).count(), 0);
        }
    }
    EXPECT_NEAR(zero_blocks / 8000.0, 0.3, 0.05);
    EXPECT_NEAR(sparsity_of(theta), zero_blocks / 8000.0, 1e-12);
}

TEST(ExpandFeatures, ShapesAndBlocks) {
    const auto b = build_ncs_basis(-3, 3, 5);
    RngStream rng(3);
    Matrix x(50, 3);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Matrix xs = expand_features(x, b);
    EXPECT_EQ(xs.rows(), 50);
    EXPECT_EQ(xs.cols(), 15);
    const Matrix one = expand_features(x.leftCols(1), b);
    for (Index i = 0; i < 50; ++i) EXPECT_EQ(Vector(one.row(i).transpose()), b.values(x(i, 0)));
}

TEST(ExpandFeatures, SlopeOnlyCoefficientsGiveLinearMap) {
    const auto b = build_ncs_basis(-3, 3, 6);
    const auto op = curvature_gram(b);
    RngStream rng(4);
    Matrix x(40, 4);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = std::clamp(rng.normal(), -3.0, 3.0);
    Vector a(4);
    a << 0.5, -1.0, 2.0, 0.0;
    Vector theta = Vector::Zero(24);
    for (Index k = 0; k < 4; ++k) theta.segment(k * 6, 6) = op.u.col(5) * (a(k) / op.upsilon);
    const Vector z = expand_features(x, b) * theta;
    EXPECT_LT((z - x * a).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ExpandFeatures, FarOutOfDomainIsAnError) {
    const auto b = build_ncs_basis(-1, 1, 4);
    Matrix x(1, 1);
    x(0, 0) = 5.0;
    EXPECT_NO_THROW(expand_features(x, b));  // clamped
    x(0, 0) = 7.5;
    EXPECT_THROW(expand_features(x, b), ParameterError);
}
