#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>
#include <flexohom/bell.hpp>

#include "test_helpers.hpp"

using namespace flexohom;
using flexohom::test_util::Poly;

namespace {

Eigen::Matrix<double, 18, 1> nodal_dofs(const Poly& p, const Triangle& t) {
    Eigen::Matrix<double, 18, 1> v;
    for (int i = 0; i < 3; ++i) v.segment<6>(6 * i) = p.dofs(t.v[i]);
    return v;
}

ElementVector element_vector(const Poly& u1, const Poly& u2, const Poly& phi, const Triangle& t) {
    ElementVector v;
    for (int i = 0; i < 3; ++i) {
        v.segment<6>(local_u_dof(i, 0, 0)) = u1.dofs(t.v[i]);
        v.segment<6>(local_u_dof(i, 1, 0)) = u2.dofs(t.v[i]);
        v.segment<6>(local_phi_dof(i, 0)) = phi.dofs(t.v[i]);
    }
    return v;
}

Poly monomial(int a, int b, double c = 1.0) {
    Poly p;
    p.c[{a, b}] = c;
    return p;
}

}  // namespace

TEST(Bell, KroneckerPropertyAtNodes) {
    std::mt19937 rng(1);
    for (int n = 0; n < 20; ++n) {
        const auto t = test_util::random_triangle(rng, 1.0 + n);
        const BellElement el(t);
        for (int i = 0; i < 3; ++i) {
            Eigen::Vector3d bary = Eigen::Vector3d::Zero();
            bary[i] = 1.0;
            const BellBasisEval b = el.eval(bary);
            // dimensionless comparison: functional k (order ok) on basis j (order oj)
            // carries units of length^(oj - ok)
            static constexpr int order[6] = {0, 1, 1, 2, 2, 2};
            const double h = t.longest_edge();
            for (int j = 0; j < 18; ++j)
                for (int k = 0; k < 6; ++k) {
                    const double expected = (j == 6 * i + k) ? 1.0 : 0.0;
                    const double scaled = b(k, j) * std::pow(h, order[k] - order[j % 6]);
                    EXPECT_NEAR(scaled, expected, 1e-12) << "node " << i << " basis " << j << " functional " << k;
                }
        }
    }
}

TEST(Bell, ValueFunctionsSumToOne) {
    std::mt19937 rng(2);
    const auto t = test_util::random_triangle(rng);
    const BellElement el(t);
    for (int n = 0; n < 20; ++n) {
        const auto b = el.eval(test_util::random_bary(rng));
        EXPECT_NEAR(b(0, 0) + b(0, 6) + b(0, 12), 1.0, 1e-12);
    }
}

TEST(Bell, ReproducesQuarticMonomialExample) {
    std::mt19937 rng(3);
    const Triangle t{{Vec2(0.1, -0.2), Vec2(1.3, 0.1), Vec2(0.4, 1.1)}};
    const Poly p = monomial(3, 1);
    const BellElement el(t);
    const auto v = nodal_dofs(p, t);
    for (int n = 0; n < 20; ++n) {
        const auto bary = test_util::random_bary(rng);
        const Vec2 x = t.point(bary);
        const double exact = p.eval(x.x(), x.y());
        EXPECT_NEAR((el.eval(bary) * v)(0), exact, 1e-10 * std::max(1.0, std::abs(exact)));
    }
}

TEST(Bell, ReproducesAllPolynomialsUpToDegreeFour) {
    std::mt19937 rng(4);
    for (int n = 0; n < 50; ++n) {
        const auto t = test_util::random_triangle(rng, 0.05 + 3.0 * n / 50.0);
        const BellElement el(t);
        const auto p = test_util::random_poly(rng, 4);
        const auto v = nodal_dofs(p, t);
        for (int q = 0; q < 10; ++q) {
            const auto bary = test_util::random_bary(rng);
            const Vec2 x = t.point(bary);
            const Eigen::Matrix<double, 6, 1> got = el.eval(bary) * v;
            const Eigen::Matrix<double, 6, 1> exact = p.dofs(x);
            for (int k = 0; k < 6; ++k) EXPECT_NEAR(got[k], exact[k], 1e-9 * std::max(1.0, exact.cwiseAbs().maxCoeff()));
        }
    }
}

TEST(Bell, DoesNotReproduceGenericQuintics) {
    std::mt19937 rng(5);
    const auto t = test_util::random_triangle(rng);
    const BellElement el(t);
    const Poly p = monomial(5, 0);
    const auto v = nodal_dofs(p, t);
    double worst = 0.0;
    for (int q = 0; q < 20; ++q) {
        const auto bary = test_util::random_bary(rng);
        const Vec2 x = t.point(bary);
        worst = std::max(worst, std::abs((el.eval(bary) * v)(0) - p.eval(x.x(), x.y())));
    }
    EXPECT_GT(worst, 1e-8);
}

TEST(Bell, CrossEdgeC1Conformity) {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        // shared edge a-b, opposite vertices on both sides
        const Vec2 a(u(rng), u(rng)), b = a + Vec2(1.0 + 0.5 * u(rng), 0.3 * u(rng));
        const Vec2 e = b - a, n(-e.y(), e.x());
        const Vec2 c = 0.5 * (a + b) + (0.6 + 0.3 * u(rng)) * n + 0.3 * u(rng) * e;
        const Vec2 d = 0.5 * (a + b) - (0.6 + 0.3 * u(rng)) * n + 0.3 * u(rng) * e;
        const Triangle t1{{a, b, c}}, t2{{b, a, d}};
        Eigen::Matrix<double, 6, 1> da, db, dc, dd;
        for (int k = 0; k < 6; ++k) da[k] = u(rng), db[k] = u(rng), dc[k] = u(rng), dd[k] = u(rng);
        Eigen::Matrix<double, 18, 1> v1, v2;
        v1 << da, db, dc;
        v2 << db, da, dd;
        const BellElement e1(t1), e2(t2);
        const Vec2 nu = n.normalized();
        for (int q = 1; q <= 10; ++q) {
            const double s = q / 11.0;
            const Vec2 x = a + s * e;
            const Eigen::Matrix<double, 6, 1> f1 = e1.eval_at(x) * v1, f2 = e2.eval_at(x) * v2;
            EXPECT_NEAR(f1[0], f2[0], 1e-9);
            EXPECT_NEAR(nu.x() * f1[1] + nu.y() * f1[2], nu.x() * f2[1] + nu.y() * f2[2], 1e-9);
        }
    }
}

TEST(Bell, RejectsDegenerateTriangle) {
    const Triangle flat{{Vec2(0, 0), Vec2(1, 0), Vec2(2, 1e-14)}};
    EXPECT_THROW(BellElement{flat}, DegenerateTriangleError);
    const Triangle ok{{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}};
    EXPECT_THROW(BellElement(ok).eval(Eigen::Vector3d(1.2, -0.1, -0.1)), Error);
}

TEST(Bell, KinematicsOfSimpleFields) {
    std::mt19937 rng(7);
    const auto t = test_util::random_triangle(rng);
    const Poly zero;
    const auto quad = triangle_quadrature(8);
    const BellElement el(t);

    const auto v1 = element_vector(monomial(1, 0), zero, zero, t);
    const auto v2 = element_vector(monomial(2, 0, 0.5), zero, zero, t);
    const auto v3 = element_vector(zero, zero, monomial(0, 1), t);
    for (const auto& bary : quad.points) {
        const auto k = kinematic_matrices(el.eval(bary));
        EXPECT_LT((k.Bu * v1.head<36>() - Vec3(1, 0, 0)).norm(), 1e-12);
        Vec6 g1;
        g1 << 1, 0, 0, 0, 0, 0;
        EXPECT_LT((k.Hu * v2.head<36>() - g1).norm(), 1e-10);
        EXPECT_LT((k.Bphi * v3.tail<18>() - Vec2(0, 1)).norm(), 1e-12);
    }
    // shear: u1 = x2 gives e12 = 1/2
    const auto vs = element_vector(monomial(0, 1), zero, zero, t);
    const auto k = kinematic_matrices(el.eval(Eigen::Vector3d(0.2, 0.3, 0.5)));
    EXPECT_LT((k.Bu * vs.head<36>() - Vec3(0, 0, 0.5)).norm(), 1e-12);
}

class BellElementMatrices : public ::testing::Test {
protected:
    Triangle tri{{Vec2(-0.1, 0.0), Vec2(0.9, 0.2), Vec2(0.3, 0.8)}};
    MaterialMatrices mat = build_material_matrices(reference_material(0.5));
};

TEST_F(BellElementMatrices, CouplingBlocksAreAdjoint) {
    const auto b = element_matrices(tri, mat);
    EXPECT_LE((b.Kphiu - b.Kuphi.transpose()).norm(), 1e-14 * b.Kuphi.norm());
}

TEST_F(BellElementMatrices, ZeroCouplingGivesZeroKuphi) {
    auto p = reference_material(0.5);
    p.e31 = p.e33 = p.e15 = p.f1 = p.f2 = 0.0;
    const auto b = element_matrices(tri, build_material_matrices(p));
    EXPECT_EQ(b.Kuphi.norm(), 0.0);
}

TEST_F(BellElementMatrices, RigidTranslationInNullSpace) {
    const auto b = element_matrices(tri, mat);
    Eigen::Matrix<double, 36, 1> v = Eigen::Matrix<double, 36, 1>::Zero();
    for (int i = 0; i < 3; ++i) {
        v[local_u_dof(i, 0, 0)] = 1.0;
        v[local_u_dof(i, 1, 0)] = -0.4;
    }
    EXPECT_LE((b.Kuu * v).norm(), 1e-10 * b.Kuu.norm() * v.norm());
}

TEST_F(BellElementMatrices, MechanicalEnergyNonNegative) {
    const auto b = element_matrices(tri, mat);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 36, 36>> es(b.Kuu);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * b.Kuu.norm());
    std::mt19937 rng(9);
    std::normal_distribution<double> nd;
    for (int n = 0; n < 100; ++n) {
        Eigen::Matrix<double, 36, 1> v;
        for (int i = 0; i < 36; ++i) v[i] = nd(rng);
        EXPECT_GE(v.dot(b.Kuu * v), -1e-12 * b.Kuu.norm() * v.squaredNorm());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 18, 18>> ep(b.Kphiphi);
    EXPECT_LE(ep.eigenvalues().maxCoeff(), 1e-12 * b.Kphiphi.norm());
}

TEST_F(BellElementMatrices, FullBlockMatrixSymmetric) {
    const BellElement el(tri);
    const ElementMatrix K = element_matrix(el, constitutive_matrix(mat), triangle_quadrature(8));
    EXPECT_LE((K - K.transpose()).norm(), 1e-13 * K.norm());
}

TEST_F(BellElementMatrices, QuadraticEnergyMatchesQuadrature) {
    // u1 = x1^2/2 + x2 on an element: energy = integral of H over the element
    const Poly zero, u1 = [] {
        Poly p;
        p.c[{2, 0}] = 0.5;
        p.c[{0, 1}] = 1.0;
        return p;
    }();
    const auto v = element_vector(u1, zero, zero, tri);
    const BellElement el(tri);
    const ElementMatrix K = element_matrix(el, constitutive_matrix(mat), triangle_quadrature(8));
    double energy = 0.0;
    const auto rule = triangle_quadrature(12);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec2 x = tri.point(rule.points[q]);
        GeneralizedStrainState s;
        s.eps << x.x(), 0, 0.5;
        s.g << 1, 0, 0, 0, 0, 0;
        energy += rule.weights[q] * 2.0 * tri.area() * enthalpy_density(s, mat);
    }
    EXPECT_NEAR(0.5 * v.dot(K * v), energy, 1e-12 * energy);
}

TEST_F(BellElementMatrices, FieldsFromZeroAndLinearSolutions) {
    const BellElement el(tri);
    const Eigen::Vector3d bary(0.2, 0.5, 0.3);
    const auto f0 = element_fields(el, ElementVector::Zero(), bary, mat);
    EXPECT_EQ(f0.sigma, Vec3::Zero());
    EXPECT_EQ(f0.D, Vec2::Zero());
    EXPECT_EQ(f0.H, 0.0);

    // u1 = 1e-3 x1, u2 = -2e-4 x2, phi = 0.5 x1 + 0.1
    Poly u1 = monomial(1, 0, 1e-3), u2 = monomial(0, 1, -2e-4), phi = monomial(1, 0, 0.5);
    phi.c[{0, 0}] = 0.1;
    const auto v = element_vector(u1, u2, phi, tri);
    GeneralizedStrainState s;
    s.eps << 1e-3, -2e-4, 0;
    s.negE << 0.5, 0;
    const auto f = element_fields(el, v, bary, mat);
    EXPECT_LT((f.state.stacked() - s.stacked()).norm(), 1e-12);
    EXPECT_LT((f.sigma - stress(s, mat)).norm(), 1e-12);
    EXPECT_LT((f.D - electric_displacement(s, mat)).norm(), 1e-16);
    EXPECT_LT((f.P - (f.D - units::vacuum_permittivity * f.E())).norm(), 1e-20);
}

TEST_F(BellElementMatrices, FieldEnthalpyRoundTrip) {
    std::mt19937 rng(12);
    std::normal_distribution<double> nd;
    const BellElement el(tri);
    ElementVector v;
    for (int i = 0; i < kElementDofs; ++i) v[i] = 1e-3 * nd(rng);
    const auto bary = test_util::random_bary(rng);
    const auto f = element_fields(el, v, bary, mat);
    EXPECT_NEAR(f.H, enthalpy_density(f.state, mat), 1e-15);
    const auto g = generalized_fields(el, v, bary, constitutive_matrix(mat));
    EXPECT_NEAR(g.H, f.H, 1e-12 * std::abs(f.H));
    EXPECT_LT((g.D - f.D).norm(), 1e-12 * f.D.norm());
}
