#include <gtest/gtest.h>

#include <random>

#include <flexohom/assembly.hpp>
#include <flexohom/block_ldlt.hpp>
#include <flexohom/mesh.hpp>

using namespace flexohom;

namespace {

MaterialMatrices reference() { return build_material_matrices(reference_material(0.5)); }

Mesh single_triangle() {
    Mesh m;
    m.nodes = {{0.0, 0.0}, {1.0, 0.1}, {0.2, 0.9}};
    m.triangles = {{0, 1, 2}};
    m.regionOf = {0};
    m.regions = {{0, "matrix"}};
    return m;
}

}  // namespace

TEST(Assembly, SingleElementEqualsElementMatrix) {
    const Mesh m = single_triangle();
    const auto laws = region_laws({{0, reference()}});
    const auto sys = assemble(m, laws);
    const ElementMatrix Ke = element_matrix(BellElement(m.triangle(0)), laws.at(0), triangle_quadrature(8));
    const auto g = element_dofs(m.triangles[0]);
    const Eigen::MatrixXd K(sys.K);
    double worst = 0.0;
    for (int i = 0; i < kElementDofs; ++i)
        for (int j = 0; j < kElementDofs; ++j) worst = std::max(worst, std::abs(K(g[i], g[j]) - Ke(i, j)));
    EXPECT_EQ(worst, 0.0);
}

TEST(Assembly, SharedNodesAccumulate) {
    const Mesh m = structured_rectangle({0, 0}, {1, 1}, 1, 1, 0, "matrix");
    ASSERT_EQ(m.num_triangles(), 2u);
    const auto laws = region_laws({{0, reference()}});
    const auto sys = assemble(m, laws);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(sys.num_dofs(), sys.num_dofs());
    for (std::size_t e = 0; e < 2; ++e) {
        const ElementMatrix Ke = element_matrix(BellElement(m.triangle(e)), laws.at(0), triangle_quadrature(8));
        const auto g = element_dofs(m.triangles[e]);
        for (int i = 0; i < kElementDofs; ++i)
            for (int j = 0; j < kElementDofs; ++j) expected(g[i], g[j]) += Ke(i, j);
    }
    EXPECT_LT((Eigen::MatrixXd(sys.K) - expected).cwiseAbs().maxCoeff(), 1e-12 * expected.cwiseAbs().maxCoeff());
    EXPECT_EQ(sys.F.size(), 0);
}

TEST(Assembly, SymmetricAndThreadIndependent) {
    const Mesh m = structured_rectangle({-0.5, -0.5}, {0.5, 0.5}, 4, 3, 0, "matrix");
    const auto laws = region_laws({{0, reference()}});
    AssemblyOptions one, three;
    three.threads = 3;
    const auto a = assemble(m, laws, one);
    const auto b = assemble(m, laws, three);
    EXPECT_EQ((Eigen::MatrixXd(a.K) - Eigen::MatrixXd(b.K)).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::MatrixXd K(a.K);
    EXPECT_LT((K - K.transpose()).cwiseAbs().maxCoeff(), 1e-12 * K.cwiseAbs().maxCoeff());
}

TEST(Assembly, MissingMaterialNamesRegion) {
    Mesh m = structured_rectangle({0, 0}, {1, 1}, 1, 1, 0, "matrix");
    m.regions[3] = "inclusion";
    m.regionOf[1] = 3;
    try {
        assemble(m, region_laws({{0, reference()}}));
        FAIL() << "expected MaterialError";
    } catch (const MaterialError& e) {
        EXPECT_NE(std::string(e.what()).find("inclusion"), std::string::npos);
    }
}

TEST(Solver, DirichletPotentialRampIsReproducedExactly) {
    const Mesh m = structured_rectangle({-0.5, -0.5}, {0.5, 0.5}, 4, 4, 0, "matrix");
    const auto sys = assemble(m, region_laws({{0, reference()}}));
    const auto b = classify_boundary(m);
    const auto red = eliminate(build_dbc(m, b), sys.num_dofs());
    const auto sol = solve(sys, red);
    EXPECT_LE(sol.residual, 1e-10);
    // column 9 is the unit -E1 case: phi = x1, no deformation for a homogeneous body
    const Eigen::MatrixXd P = macro_polynomial_dofs(m);
    const Eigen::VectorXd diff = sol.U.col(9) - P.col(9);
    for (std::size_t n = 0; n < m.num_nodes(); ++n) {
        EXPECT_NEAR(sol.U(n * 18 + 12, 9), m.nodes[n].x(), 1e-9);
        EXPECT_NEAR(sol.U(n * 18 + 13, 9), 1.0, 1e-9);
    }
    EXPECT_LT(diff.lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Solver, ResidualCheckDetectsPerturbedSolution) {
    const Mesh m = structured_rectangle({-0.5, -0.5}, {0.5, 0.5}, 3, 3, 0, "matrix");
    const auto sys = assemble(m, region_laws({{0, reference()}}));
    const auto b = classify_boundary(m);
    const auto red = eliminate(build_pbc(m, b, pair_periodic_nodes(m, b)), sys.num_dofs());
    const auto sol = solve(sys, red);
    EXPECT_LE(sol.residual, 1e-10);
    Eigen::MatrixXd bad = sol.U;
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    for (int i = 0; i < bad.rows(); ++i)
        if (red.freeIndex[i] >= 0) bad(i, 3) *= 1.0 + u(rng);
    EXPECT_GT(residual_check(sys, red, bad), 1e-6);
}

TEST(Solver, UnconstrainedSystemIsSingular) {
    const Mesh m = structured_rectangle({0, 0}, {1, 1}, 2, 2, 0, "matrix");
    const auto sys = assemble(m, region_laws({{0, reference()}}));
    ConstraintSet none;
    const auto red = eliminate(none, sys.num_dofs());
    EXPECT_THROW(ReducedSolver(sys, red), SolverError);
}

TEST(Solver, ReducedMatrixIsQuasiDefinite) {
    // mechanical block positive, electrical block negative definite
    const Mesh m = structured_rectangle({-0.5, -0.5}, {0.5, 0.5}, 3, 3, 0, "matrix");
    const auto sys = assemble(m, region_laws({{0, reference()}}));
    const auto b = classify_boundary(m);
    const auto red = eliminate(build_dbc(m, b), sys.num_dofs());
    const ReducedSolver solver(sys, red);
    const Eigen::MatrixXd Kr(solver.scaled_reduced_matrix());
    std::vector<int> mech, elec;
    for (std::size_t d = 0; d < red.freeIndex.size(); ++d) {
        if (red.freeIndex[d] < 0) continue;
        (d % 18 >= 12 ? elec : mech).push_back(red.freeIndex[d]);
    }
    auto sub = [&](const std::vector<int>& idx) {
        Eigen::MatrixXd S(idx.size(), idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) S(i, j) = Kr(idx[i], idx[j]);
        return S;
    };
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(sub(mech)), ee(sub(elec));
    EXPECT_GT(em.eigenvalues().minCoeff(), 0.0);
    EXPECT_LT(ee.eigenvalues().maxCoeff(), 0.0);
}

TEST(BlockFactorization, MatchesDenseSolveOnRandomQuasiDefiniteMatrix) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // groups of varying size on a ring with random chords
    const std::vector<int> sizes{3, 1, 4, 2, 5, 3, 2, 1, 4, 3, 2, 2};
    std::vector<int> start{0};
    for (int s : sizes) start.push_back(start.back() + s);
    const int n = start.back(), nb = static_cast<int>(sizes.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    auto couple = [&](int a, int b) {
        for (int i = start[a]; i < start[a + 1]; ++i)
            for (int j = start[b]; j < start[b + 1]; ++j) {
                const double v = 0.3 * u(rng);
                A(i, j) += v;
                A(j, i) += v;
            }
    };
    for (int a = 0; a < nb; ++a) couple(a, (a + 1) % nb);
    couple(0, 6);
    couple(2, 9);
    // quasi-definite: the first half of the dofs positive, the rest negative
    for (int i = 0; i < n; ++i) A(i, i) = (i < n / 2 ? 1.0 : -1.0) * (4.0 + std::abs(u(rng)));
    const Eigen::SparseMatrix<double> S = A.sparseView();
    BlockLDLT f;
    f.compute(S, start);
    const Eigen::MatrixXd B = Eigen::MatrixXd::Random(n, 3);
    const Eigen::MatrixXd X = f.solve(B);
    EXPECT_LT((A * X - B).norm() / B.norm(), 1e-13);
    EXPECT_LT((X - A.partialPivLu().solve(B)).norm(), 1e-12);
    EXPECT_GT(f.pivot_ratio(), 0.0);
}

TEST(BlockFactorization, RejectsBadPartition) {
    const Eigen::SparseMatrix<double> A = Eigen::MatrixXd::Identity(4, 4).sparseView();
    BlockLDLT f;
    EXPECT_THROW(f.compute(A, {0, 2, 3}), SolverError);
    EXPECT_THROW(f.compute(A, {0, 2, 2, 4}), SolverError);
}
