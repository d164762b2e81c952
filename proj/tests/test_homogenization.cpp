#include <gtest/gtest.h>

#include <flexohom/homogenization.hpp>
#include <flexohom/mesh_generation.hpp>

using namespace flexohom;

namespace {

MaterialMatrices reference(double l = 1.0) { return build_material_matrices(reference_material(l)); }

Mesh holed_cell(double h = 0.1) {
    return generate_square_rve(1.0, {Shape::circle({0, 0}, porosity_radius(0.2, 1.0))}, h);
}

Mesh plain_cell(int n = 5) { return structured_rectangle({-0.5, -0.5}, {0.5, 0.5}, n, n, kMatrixRegion, "matrix"); }

RveOptions with_bc(BoundaryCondition bc) {
    RveOptions o;
    o.bc = bc;
    return o;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(Homogenization, HomogeneousCellReproducesMaterialForUniformLoads) {
    const auto mat = reference();
    const RveProblem p(plain_cell(), {{kMatrixRegion, mat}});
    for (int j : {0, 1, 2, 9, 10}) EXPECT_LE(p.relative_fluctuation(p.run(unit_macro_state(j))), 1e-9) << j;
    const auto t = p.tangents();
    EXPECT_LE(rel(t.CsigEps(), mat.C), 1e-8);
    EXPECT_LE(rel(t.CsigE(), mat.eMat), 1e-8);
    EXPECT_LE(rel(t.CDE(), -mat.kappa), 1e-8);
}

TEST(Homogenization, GradientLoadsOnHomogeneousCellFluctuate) {
    // a quadratic displacement is not in equilibrium for a homogeneous body,
    // so unit g cases must develop a fluctuation
    const RveProblem p(plain_cell(), {{kMatrixRegion, reference()}});
    EXPECT_GT(p.relative_fluctuation(p.run(unit_macro_state(3))), 1e-3);
}

TEST(Homogenization, HillMandelHoldsForAllUnitCases) {
    const Mesh m = holed_cell();
    for (auto bc : {BoundaryCondition::Periodic, BoundaryCondition::Dirichlet}) {
        const RveProblem p(m, {{kMatrixRegion, reference()}}, with_bc(bc));
        for (int j = 0; j < 11; ++j) EXPECT_LE(hill_mandel_gap(p.run_averaged(unit_macro_state(j))), 1e-8) << to_string(bc) << j;
        Vec11 mixed;
        mixed << 1e-3, -2e-3, 5e-4, 0.1, -0.2, 0.05, 0.3, -0.1, 0.2, 1e-2, -3e-2;
        EXPECT_LE(hill_mandel_gap(p.run_averaged(MacroState::from_stacked(mixed))), 1e-8);
    }
}

TEST(Homogenization, TangentIsSymmetric) {
    const Mesh m = holed_cell();
    for (auto bc : {BoundaryCondition::Periodic, BoundaryCondition::Dirichlet}) {
        const auto t = RveProblem(m, {{kMatrixRegion, reference()}}, with_bc(bc)).tangents();
        EXPECT_LE(t.symmetry_defect(), 1e-8);
        EXPECT_LE(rel(t.CtauEps(), t.CsigG().transpose()), 1e-8);
        EXPECT_LE(rel(t.CDeps(), t.CsigE().transpose()), 1e-8);
        EXPECT_LE(rel(t.CtauE(), t.CDg().transpose()), 1e-8);
    }
}

TEST(Homogenization, BoundaryIntegralsRecoverTheMacroState) {
    const Mesh m = holed_cell();
    Vec11 mixed;
    mixed << 2e-3, 1e-3, -1e-3, 0.2, 0.1, -0.3, 0.05, 0.4, -0.2, 3e-2, 1e-2;
    for (auto bc : {BoundaryCondition::Periodic, BoundaryCondition::Dirichlet}) {
        const RveProblem p(m, {{kMatrixRegion, reference()}}, with_bc(bc));
        const auto r = p.run(MacroState::from_stacked(mixed));
        EXPECT_LE((p.recovered_macro_state(r.solution).stacked() - mixed).norm(), 1e-8 * mixed.norm());
    }
}

TEST(Homogenization, VolumeAverageEqualsMacroStateWithoutHoles) {
    const Mesh m = generate_inclusion_rve(1.0, {Shape::circle({0, 0}, 0.25)}, 0.12);
    const auto mat = reference();
    auto soft = mat;
    soft.C *= 0.3;
    Vec11 mixed;
    mixed << 2e-3, 1e-3, -1e-3, 0.2, 0.1, -0.3, 0.05, 0.4, -0.2, 3e-2, 1e-2;
    for (auto bc : {BoundaryCondition::Periodic, BoundaryCondition::Dirichlet}) {
        const RveProblem p(m, {{kMatrixRegion, soft}, {kInclusionRegion, mat}}, with_bc(bc));
        const auto r = p.run(MacroState::from_stacked(mixed));
        const Vec11 avg = p.volume_average_state(r.solution).stacked();
        // the eps average carries no g contribution because the cell is centered
        EXPECT_LE((avg - mixed).norm(), 1e-8 * mixed.norm()) << to_string(bc);
    }
}

TEST(Homogenization, UnitCasesShareOneFactorization) {
    const RveProblem p(holed_cell(0.15), {{kMatrixRegion, reference()}});
    EXPECT_EQ(p.factorization_count(), 0);
    p.tangents();
    for (int j = 0; j < 11; ++j) p.run(unit_macro_state(j));
    EXPECT_EQ(p.factorization_count(), 1);
    EXPECT_LE(p.unit_residual(), 1e-10);
}

TEST(Homogenization, ResultIsLinearInMacroState) {
    const RveProblem p(holed_cell(0.15), {{kMatrixRegion, reference()}});
    const auto t = p.tangents();
    Vec11 m;
    m << 1e-3, 0, 2e-3, 0.1, 0, -0.1, 0, 0.2, 0, 1e-2, 0;
    const auto r = p.run_averaged(MacroState::from_stacked(m));
    EXPECT_LE((r.generalized_stress() - t.Cbig * m).norm(), 1e-10 * (t.Cbig * m).norm());
    const auto fast = p.run(MacroState::from_stacked(m));
    EXPECT_LE((fast.generalized_stress() - r.generalized_stress()).norm(), 1e-12 * (t.Cbig * m).norm());
    EXPECT_NEAR(fast.microEnergy, r.microEnergy, 1e-12 * std::abs(r.microEnergy));
}

TEST(Homogenization, RejectsUncenteredMeshWhenCenteringIsOff) {
    RveOptions o;
    o.center = false;
    const Mesh m = structured_rectangle({0, 0}, {1, 1}, 2, 2, kMatrixRegion, "matrix");
    EXPECT_THROW(RveProblem(m, {{kMatrixRegion, reference()}}, o), MeshError);
}

TEST(Homogenization, MissingMaterialIsReported) {
    const Mesh m = generate_inclusion_rve(1.0, {Shape::circle({0, 0}, 0.25)}, 0.2);
    EXPECT_THROW(RveProblem(m, {{kMatrixRegion, reference()}}), MaterialError);
}

TEST(Homogenization, BoundaryConditionNames) {
    EXPECT_EQ(parse_boundary_condition("PBC"), BoundaryCondition::Periodic);
    EXPECT_EQ(parse_boundary_condition("dbc"), BoundaryCondition::Dirichlet);
    EXPECT_THROW(parse_boundary_condition("robin"), ConfigError);
}
