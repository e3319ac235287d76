#include "mass/projection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace mass;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST(DrawColumnSparsities, MeansMatchTarget) {
    for (double xi : {0.5, 0.25, 0.98}) {
        RngStream rng(static_cast<std::uint64_t>(xi * 1000));
        SparsitySpec spec;
        spec.target = xi;
        EXPECT_NEAR(mean_of(draw_column_sparsities(100000, spec, rng)), xi, 0.005) << "xi=" << xi;
    }
}

TEST(DrawColumnSparsities, BetaParametersFollowTarget) {
    SparsitySpec spec;
    spec.target = 0.25;
    EXPECT_DOUBLE_EQ(spec.beta_a(), 5.0);
    EXPECT_DOUBLE_EQ(spec.beta_b(), 15.0);
    spec.target = 0.5;
    EXPECT_DOUBLE_EQ(spec.beta_b(), 5.0);
}

TEST(DrawColumnSparsities, ClampsDegenerateTargets) {
    SparsitySpec spec;
    spec.target = 0.0;
    EXPECT_DOUBLE_EQ(spec.clamped_target(), 0.01);
    spec.target = 1.0;
    EXPECT_DOUBLE_EQ(spec.clamped_target(), 0.99);
    RngStream rng(3);
    for (double v : draw_column_sparsities(1000, spec, rng)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(DrawColumnSparsities, MonteCarloWithinThreeStandardErrors) {
    for (double xi = 0.05; xi <= 0.951; xi += 0.15) {
        SparsitySpec spec;
        spec.target = xi;
        RngStream rng(static_cast<std::uint64_t>(xi * 1e4) + 17);
        const auto v = draw_column_sparsities(20000, spec, rng);
        const double var = xi * (1 - xi) / (spec.alpha / xi + 1);
        EXPECT_NEAR(mean_of(v), xi, 3.0 * std::sqrt(var / v.size())) << "xi=" << xi;
    }
}

TEST(DrawColumnSparsities, DenseAtZeroBypassesBeta) {
    SparsitySpec spec;
    spec.target = 0.0;
    spec.dense_at_zero = true;
    RngStream rng(1);
    for (double v : draw_column_sparsities(50, spec, rng)) EXPECT_EQ(v, 0.0);
    const Matrix a = gen_candidate_columns(40, 20, spec, rng);
    EXPECT_EQ(sparsity_of(a), 0.0);
}

TEST(GenCandidateColumns, UnitNormAndNoZeroColumns) {
    RngStream rng(9);
    for (double xi : {0.1, 0.5, 0.9, 0.98}) {
        SparsitySpec spec;
        spec.target = xi;
        const Matrix a = gen_candidate_columns(50, 200, spec, rng);
        for (Index j = 0; j < a.cols(); ++j) {
            EXPECT_NEAR(a.col(j).norm(), 1.0, 1e-12);
            EXPECT_FALSE(a.col(j).isZero(0.0));
        }
    }
}

TEST(GenCandidateColumns, ColumnZeroFractionTracksLevel) {
    RngStream rng(10);
    Vector col(10000);
    ASSERT_TRUE(try_fill_sparse_column(col, 0.5, rng));
    EXPECT_NEAR(sparsity_of(col), 0.5, 0.02);
    ASSERT_TRUE(try_fill_sparse_column(col, 0.0, rng));
    EXPECT_EQ(sparsity_of(col), 0.0);
    EXPECT_NEAR(col.norm(), 1.0, 1e-12);
}

TEST(GenCandidateColumns, BlockZeroFractionMatchesDrawnLevels) {
    SparsitySpec spec;
    spec.target = 0.3;
    RngStream rng(21);
    const Matrix a = gen_candidate_columns(2000, 400, spec, rng);
    EXPECT_NEAR(sparsity_of(a), 0.3, 0.01);
}

TEST(GenCandidateColumns, Deterministic) {
    SparsitySpec spec;
    RngStream a(4), b(4);
    EXPECT_EQ(gen_candidate_columns(30, 10, spec, a), gen_candidate_columns(30, 10, spec, b));
}

TEST(Project, SelectorMatrixPicksColumns) {
    RngStream rng(2);
    Matrix x(6, 5);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const Matrix a = Matrix::Identity(5, 5).leftCols(2);
    EXPECT_EQ(project(x, a), x.leftCols(2));
}

TEST(Project, OneHotRowExtractsRowOfA) {
    Matrix a(4, 3);
    a << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    Matrix e = Matrix::Zero(1, 4);
    e(0, 2) = 1.0;
    EXPECT_EQ(project(e, a), a.row(2));
}

TEST(Project, HandComputedProduct) {
    Matrix x(4, 3);
    x << 1, 0, 2, -1, 3, 1, 0, 2, 0, 4, -2, 1;
    Matrix a(3, 2);
    a << 1, 2, 0, -1, 3, 1;
    Matrix expect(4, 2);
    expect << 7, 4, 2, -4, 0, -2, 7, 11;
    EXPECT_EQ(project(x, a), expect);
}

TEST(Project, IsLinear) {
    RngStream rng(8);
    Matrix x(7, 5), a(5, 3);
    Vector c(3);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Index i = 0; i < 3; ++i) c(i) = rng.normal();
    EXPECT_LT((project(x, a) * c - project(x, Matrix(a * c))).norm(), 1e-12);
}

TEST(Project, ShapeMismatchNamesShapes) {
    try {
        project(Matrix::Zero(3, 4), Matrix::Zero(5, 2));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("3x4"), std::string::npos) << msg;
        EXPECT_NE(msg.find("5x2"), std::string::npos) << msg;
    }
}

TEST(SparsityOf, PaperSelectorIs098) {
    Matrix a = Matrix::Zero(50, 5);
    for (Index j = 0; j < 5; ++j) a(j, j) = 1.0;
    EXPECT_DOUBLE_EQ(sparsity_of(a), 0.98);
    EXPECT_DOUBLE_EQ(sparsity_of(Matrix::Zero(3, 3)), 1.0);
    RngStream rng(1);
    Matrix g(100, 100);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    EXPECT_DOUBLE_EQ(sparsity_of(g), 0.0);
}

TEST(SparsityOf, InvariantUnderNormalization) {
    SparsitySpec spec;
    spec.target = 0.6;
    RngStream rng(12);
    const Matrix a = gen_candidate_columns(30, 8, spec, rng);
    const Matrix scaled = a * 3.7;
    EXPECT_EQ(sparsity_of(a), sparsity_of(scaled));
    ProjectionMatrix pm{a};
    EXPECT_EQ(pm.mean_sparsity(), sparsity_of(a));
    EXPECT_EQ(pm.col_sparsity().size(), 8u);
}
