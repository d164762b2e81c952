#include <gtest/gtest.h>

#include <random>

#include <flexohom/mesh.hpp>
#include <flexohom/rve_bc.hpp>

#include "test_helpers.hpp"

using namespace flexohom;
using flexohom::test_util::Poly;

namespace {

Vec11 random_macro(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec11 v;
    for (int i = 0; i < 11; ++i) v[i] = u(rng);
    return v;
}

// Polynomials u1, u2, phi of a stacked macro state, built independently of macro_row_blocks.
std::array<Poly, 3> macro_polys(const Vec11& m) {
    std::array<Poly, 3> p;
    // u1 = e11 x + e12 y + g111 x^2/2 + g112 x y + g122 y^2/2
    p[0].c[{1, 0}] = m[0];
    p[0].c[{0, 1}] = m[2];
    p[0].c[{2, 0}] = 0.5 * m[3];
    p[0].c[{1, 1}] = m[4];
    p[0].c[{0, 2}] = 0.5 * m[5];
    // u2 = e12 x + e22 y + g211 x^2/2 + g212 x y + g222 y^2/2
    p[1].c[{1, 0}] = m[2];
    p[1].c[{0, 1}] = m[1];
    p[1].c[{2, 0}] = 0.5 * m[6];
    p[1].c[{1, 1}] = m[7];
    p[1].c[{0, 2}] = 0.5 * m[8];
    p[2].c[{1, 0}] = m[9];
    p[2].c[{0, 1}] = m[10];
    return p;
}

Mesh grid(int n) { return structured_rectangle({-0.5, -0.5}, {0.5, 0.5}, n, n, 0, "matrix"); }

}  // namespace

TEST(MacroPolynomial, NodeMatrixMatchesAnalyticDerivatives) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec11 m = random_macro(rng);
        const Vec2 x(std::uniform_real_distribution<double>(-1, 1)(rng), std::uniform_real_distribution<double>(-1, 1)(rng));
        const auto polys = macro_polys(m);
        const Eigen::Matrix<double, 18, 1> dofs = macro_node_matrix(x) * m;
        for (int f = 0; f < 3; ++f) EXPECT_LT((dofs.segment<6>(6 * f) - polys[f].dofs(x)).norm(), 1e-14);
    }
}

TEST(MacroPolynomial, RowBlocksAtSamplePoint) {
    const auto b = macro_row_blocks(0.5, -0.25);
    // u1 value row: (x1, 0, x2) on eps, (x1^2/2, x1 x2, x2^2/2) on g1jk
    EXPECT_DOUBLE_EQ(b.W(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(b.W(0, 2), -0.25);
    EXPECT_DOUBLE_EQ(b.S(0, 0), 0.125);
    EXPECT_DOUBLE_EQ(b.S(0, 1), -0.125);
    EXPECT_DOUBLE_EQ(b.S(0, 2), 0.03125);
    // u2,2 row picks eps22 and (g212 x1 + g222 x2)
    EXPECT_DOUBLE_EQ(b.W(8, 1), 1.0);
    EXPECT_DOUBLE_EQ(b.S(8, 4), 0.5);
    EXPECT_DOUBLE_EQ(b.S(8, 5), -0.25);
    EXPECT_DOUBLE_EQ(b.L(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(b.L(0, 1), -0.25);
}

TEST(PeriodicConstraints, CountsOnGrid) {
    const Mesh m = grid(4);
    const auto b = classify_boundary(m);
    const auto pairs = pair_periodic_nodes(m, b);
    const auto cs = build_pbc(m, b, pairs);
    EXPECT_EQ(cs.relations.size(), 6u * 18u);
    EXPECT_EQ(cs.prescribed.size(), 4u * 18u);
    const auto red = eliminate(cs, static_cast<int>(m.num_nodes()) * 18);
    EXPECT_EQ(red.num_free(), 25 * 18 - 6 * 18 - 4 * 18);
    EXPECT_EQ(red.num_params(), 11);
}

TEST(PeriodicConstraints, MacroPolynomialSatisfiesEveryRelation) {
    const Mesh m = grid(5);
    const auto b = classify_boundary(m);
    const auto cs = build_pbc(m, b, pair_periodic_nodes(m, b));
    const Eigen::MatrixXd P = macro_polynomial_dofs(m);
    for (const auto& r : cs.relations) {
        Eigen::RowVectorXd rhs = r.offset;
        for (const auto& [mst, c] : r.masters) rhs += c * P.row(mst);
        EXPECT_LT((P.row(r.slave) - rhs).norm(), 1e-14);
    }
    for (const auto& p : cs.prescribed) EXPECT_LT((P.row(p.dof) - p.value).norm(), 1e-14);
}

TEST(PeriodicConstraints, ReductionSatisfiesRelationsForAnyFreeValues) {
    const Mesh m = grid(3);
    const auto b = classify_boundary(m);
    const auto cs = build_pbc(m, b, pair_periodic_nodes(m, b));
    const auto red = eliminate(cs, static_cast<int>(m.num_nodes()) * 18);
    std::mt19937 rng(5);
    const Eigen::VectorXd z = Eigen::VectorXd::Random(red.num_free());
    const Vec11 p = random_macro(rng);
    const Eigen::VectorXd u = red.T * z + red.R * p;
    for (const auto& r : cs.relations) {
        double rhs = r.offset.dot(p);
        for (const auto& [mst, c] : r.masters) rhs += c * u[mst];
        EXPECT_NEAR(u[r.slave], rhs, 1e-13);
    }
}

TEST(DirichletConstraints, AllBoundaryDofsPrescribed) {
    const Mesh m = grid(4);
    const auto b = classify_boundary(m);
    const auto cs = build_dbc(m, b);
    EXPECT_EQ(cs.prescribed.size(), 16u * 18u);
    EXPECT_TRUE(cs.relations.empty());
    const auto red = eliminate(cs, static_cast<int>(m.num_nodes()) * 18);
    EXPECT_EQ(red.num_free(), 9 * 18);
}

TEST(Eliminate, ChainedRelationsResolveToFreeDofs) {
    ConstraintSet cs;
    cs.numParams = 1;
    // u2 = 2 u1 + 1, u3 = u2 - u0 + 3
    cs.relations.push_back({2, {{1, 2.0}}, Eigen::RowVectorXd::Constant(1, 1.0)});
    cs.relations.push_back({3, {{2, 1.0}, {0, -1.0}}, Eigen::RowVectorXd::Constant(1, 3.0)});
    const auto red = eliminate(cs, 4);
    ASSERT_EQ(red.num_free(), 2);
    const Eigen::MatrixXd T(red.T);
    EXPECT_DOUBLE_EQ(T(3, red.freeIndex[1]), 2.0);
    EXPECT_DOUBLE_EQ(T(3, red.freeIndex[0]), -1.0);
    EXPECT_DOUBLE_EQ(red.R(3, 0), 4.0);
}

TEST(Eliminate, RejectsInconsistentSets) {
    ConstraintSet cycle;
    cycle.numParams = 1;
    cycle.relations.push_back({0, {{1, 1.0}}, Eigen::RowVectorXd::Zero(1)});
    cycle.relations.push_back({1, {{0, 1.0}}, Eigen::RowVectorXd::Zero(1)});
    EXPECT_THROW(eliminate(cycle, 3), ConstraintError);

    ConstraintSet twice;
    twice.numParams = 1;
    twice.prescribed.push_back({0, Eigen::RowVectorXd::Zero(1)});
    twice.prescribed.push_back({0, Eigen::RowVectorXd::Ones(1)});
    EXPECT_THROW(eliminate(twice, 2), ConstraintError);

    ConstraintSet both;
    both.numParams = 1;
    both.prescribed.push_back({0, Eigen::RowVectorXd::Zero(1)});
    both.relations.push_back({0, {{1, 1.0}}, Eigen::RowVectorXd::Zero(1)});
    EXPECT_THROW(eliminate(both, 2), ConstraintError);

    ConstraintSet wrongWidth;
    wrongWidth.numParams = 2;
    wrongWidth.prescribed.push_back({0, Eigen::RowVectorXd::Zero(1)});
    EXPECT_THROW(eliminate(wrongWidth, 2), ConstraintError);
}
