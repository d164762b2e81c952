#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "constitutive.hpp"
#include "error.hpp"
#include "quadrature.hpp"

namespace flexohom {

/// Nodal degrees of freedom: (value, d/dx1, d/dx2, d2/dx1dx1, d2/dx1dx2, d2/dx2dx2)
/// for each of u1, u2, phi, in that order.
inline constexpr int kDofsPerField = 6;
inline constexpr int kDofsPerNode = 18;
inline constexpr int kElementDofs = 54;
inline constexpr int kElementUDofs = 36;

enum class Field { U1 = 0, U2 = 1, Phi = 2 };

constexpr int global_dof(int node, Field f, int k) { return node * kDofsPerNode + static_cast<int>(f) * kDofsPerField + k; }

/// Element-local dof index: u block (node i, component c, k) at i*12 + c*6 + k,
/// phi block at 36 + i*6 + k.
constexpr int local_u_dof(int i, int c, int k) { return i * 12 + c * 6 + k; }
constexpr int local_phi_dof(int i, int k) { return kElementUDofs + i * 6 + k; }

struct Triangle {
    std::array<Vec2, 3> v;

    double signed_area() const {
        return 0.5 * ((v[1] - v[0]).x() * (v[2] - v[0]).y() - (v[1] - v[0]).y() * (v[2] - v[0]).x());
    }
    double area() const { return std::abs(signed_area()); }
    double longest_edge() const {
        return std::max({(v[1] - v[0]).norm(), (v[2] - v[1]).norm(), (v[0] - v[2]).norm()});
    }
    Vec2 point(const Eigen::Vector3d& bary) const { return bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2]; }
    Vec2 centroid() const { return (v[0] + v[1] + v[2]) / 3.0; }
    Eigen::Vector3d barycentric(const Vec2& x) const {
        const double a = signed_area();
        auto sub = [&](const Vec2& p, const Vec2& q, const Vec2& r) {
            return 0.5 * ((q - p).x() * (r - p).y() - (q - p).y() * (r - p).x());
        };
        return {sub(x, v[1], v[2]) / a, sub(v[0], x, v[2]) / a, sub(v[0], v[1], x) / a};
    }
};

inline constexpr double kDegeneracyRatio = 1e-12;

inline bool is_degenerate(const Triangle& t) {
    const double h = t.longest_edge();
    return !(t.area() > kDegeneracyRatio * h * h);
}

inline void require_nondegenerate(const Triangle& t) {
    if (is_degenerate(t)) throw DegenerateTriangleError("degenerate triangle (area below 1e-12 h^2)");
}

/// Basis values and physical derivatives of the 18 scalar Bell functions.
/// Row order: value, d1, d2, d11, d12, d22. Column j = node (j / 6), dof (j % 6).
using BellBasisEval = Eigen::Matrix<double, 6, 18>;

namespace detail {

inline constexpr int kQuinticSize = 21;

inline constexpr std::array<std::array<int, 2>, kQuinticSize> quintic_exponents() {
    std::array<std::array<int, 2>, kQuinticSize> e{};
    int n = 0;
    for (int d = 0; d <= 5; ++d)
        for (int b = 0; b <= d; ++b) e[n++] = {d - b, b};
    return e;
}

/// Monomials s^a t^b and derivatives up to second order, rows ordered as BellBasisEval.
template <typename T = double>
Eigen::Matrix<T, 6, kQuinticSize> monomial_table(T s, T t) {
    static constexpr auto ex = quintic_exponents();
    T ps[6], pt[6];
    ps[0] = pt[0] = 1.0;
    for (int k = 1; k < 6; ++k) {
        ps[k] = ps[k - 1] * s;
        pt[k] = pt[k - 1] * t;
    }
    auto pw = [](const T* p, int k) { return k < 0 ? T(0) : p[k]; };
    Eigen::Matrix<T, 6, kQuinticSize> P;
    for (int j = 0; j < kQuinticSize; ++j) {
        const int a = ex[j][0], b = ex[j][1];
        P(0, j) = pw(ps, a) * pw(pt, b);
        P(1, j) = a * pw(ps, a - 1) * pw(pt, b);
        P(2, j) = b * pw(ps, a) * pw(pt, b - 1);
        P(3, j) = a * (a - 1) * pw(ps, a - 2) * pw(pt, b);
        P(4, j) = a * b * pw(ps, a - 1) * pw(pt, b - 1);
        P(5, j) = b * (b - 1) * pw(ps, a) * pw(pt, b - 2);
    }
    return P;
}

}  // namespace detail

/// Bell triangle: the 21-dof quintic (Argyris) basis with the three mid-side
/// normal-derivative dofs condensed so that edge normal derivatives are cubic.
/// Internally works in scaled coordinates s = (x - centroid) / h.
class BellElement {
public:
    explicit BellElement(const Triangle& tri) : tri_(tri) {
        require_nondegenerate(tri);
        center_ = tri.centroid();
        h_ = tri.longest_edge();
        build();
    }

    const Triangle& triangle() const { return tri_; }

    /// Evaluate at a barycentric point of the closed triangle.
    BellBasisEval eval(const Eigen::Vector3d& bary) const {
        if (bary.minCoeff() < -1e-10 || std::abs(bary.sum() - 1.0) > 1e-10)
            throw Error("evaluation point outside the element");
        return eval_at(tri_.point(bary));
    }

    /// Evaluate at a physical point (no containment check).
    BellBasisEval eval_at(const Vec2& x) const {
        // Extended precision: the quintic has sizeable cancelling terms.
        const long double sx = (static_cast<long double>(x.x()) - center_.x()) / h_;
        const long double sy = (static_cast<long double>(x.y()) - center_.y()) / h_;
        BellBasisEval B = (detail::monomial_table<long double>(sx, sy) * coeff_).cast<double>();
        B.row(1) /= h_;
        B.row(2) /= h_;
        B.row(3) /= h_ * h_;
        B.row(4) /= h_ * h_;
        B.row(5) /= h_ * h_;
        return B;
    }

    /// Quintic (Argyris) coefficient matrix before condensation; columns are
    /// the 18 vertex functionals followed by the 3 mid-side normal derivatives,
    /// all in scaled coordinates.
    const Eigen::Matrix<double, 21, 21>& argyris_coefficients() const { return argyris_; }
    /// Rank-3 map from the scaled vertex dofs to the mid-side normal derivatives.
    const Eigen::Matrix<double, 3, 18>& condensation() const { return condense_; }

private:
    void build() {
        // Assembled and inverted in extended precision; the coefficients are
        // rounded to double once at the end.
        using LD = long double;
        using MatL = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;
        using V2L = Eigen::Matrix<LD, 2, 1>;
        std::array<V2L, 3> s;
        for (int i = 0; i < 3; ++i)
            s[i] = (tri_.v[i].cast<LD>() - center_.cast<LD>()) / static_cast<LD>(h_);

        MatL A(21, 21);
        for (int i = 0; i < 3; ++i) {
            const auto P = detail::monomial_table<LD>(s[i].x(), s[i].y());
            for (int k = 0; k < 6; ++k) A.row(6 * i + k) = P.row(k);
        }
        std::array<V2L, 3> normals;
        for (int m = 0; m < 3; ++m) {
            const V2L& a = s[m];
            const V2L& b = s[(m + 1) % 3];
            const V2L e = b - a;
            normals[m] = V2L(e.y(), -e.x()).normalized();
            const V2L mid = (a + b) / 2;
            const auto P = detail::monomial_table<LD>(mid.x(), mid.y());
            A.row(18 + m) = normals[m].x() * P.row(1) + normals[m].y() * P.row(2);
        }
        const MatL inv = A.fullPivLu().inverse();

        // Cubic Hermite interpolation of the normal derivative along each edge:
        // f(1/2) = (f0 + f1)/2 + (f0' - f1')/8, with f' = d/dt along a -> b.
        MatL M = MatL::Zero(3, 18);
        for (int m = 0; m < 3; ++m) {
            const int ia = m, ib = (m + 1) % 3;
            const V2L e = s[ib] - s[ia];
            const V2L& n = normals[m];
            for (int side = 0; side < 2; ++side) {
                const int node = side == 0 ? ia : ib;
                const LD sign = side == 0 ? 1 : -1;
                M(m, 6 * node + 1) += n.x() / 2;
                M(m, 6 * node + 2) += n.y() / 2;
                M(m, 6 * node + 3) += sign * e.x() * n.x() / 8;
                M(m, 6 * node + 4) += sign * (e.x() * n.y() + e.y() * n.x()) / 8;
                M(m, 6 * node + 5) += sign * e.y() * n.y() / 8;
            }
        }
        const MatL coeff = inv.leftCols(18) + inv.rightCols(3) * M;
        argyris_ = inv.cast<double>();
        condense_ = M.cast<double>();
        coeff_ = coeff;
        static constexpr int order[6] = {0, 1, 1, 2, 2, 2};
        for (int j = 0; j < 18; ++j) coeff_.col(j) *= std::pow(static_cast<long double>(h_), order[j % 6]);
    }

    Triangle tri_;
    Vec2 center_;
    double h_ = 1.0;
    Eigen::Matrix<double, 21, 21> argyris_;
    Eigen::Matrix<double, 3, 18> condense_;
    Eigen::Matrix<long double, 21, 18> coeff_;
};

inline BellBasisEval bell_basis(const Eigen::Vector3d& bary, const Triangle& tri) { return BellElement(tri).eval(bary); }

/// Interpolation and derivative matrices at one point.
struct KinematicMatrices {
    Eigen::Matrix<double, 2, 36> Nu;
    Eigen::Matrix<double, 3, 36> Bu;
    Eigen::Matrix<double, 6, 36> Hu;
    Eigen::Matrix<double, 1, 18> Nphi;
    Eigen::Matrix<double, 2, 18> Bphi;

    /// Generalized strain operator [Bu 0; Hu 0; 0 Bphi] (11 x 54).
    Eigen::Matrix<double, 11, kElementDofs> generalized() const {
        Eigen::Matrix<double, 11, kElementDofs> B = Eigen::Matrix<double, 11, kElementDofs>::Zero();
        B.block<3, 36>(0, 0) = Bu;
        B.block<6, 36>(3, 0) = Hu;
        B.block<2, 18>(9, 36) = Bphi;
        return B;
    }
};

inline KinematicMatrices kinematic_matrices(const BellBasisEval& b) {
    KinematicMatrices k;
    k.Nu.setZero();
    k.Bu.setZero();
    k.Hu.setZero();
    for (int i = 0; i < 3; ++i) {
        for (int d = 0; d < 6; ++d) {
            const int j = 6 * i + d;
            const int u1 = 12 * i + d, u2 = 12 * i + 6 + d, p = 6 * i + d;
            k.Nu(0, u1) = b(0, j);
            k.Nu(1, u2) = b(0, j);
            k.Bu(0, u1) = b(1, j);
            k.Bu(1, u2) = b(2, j);
            k.Bu(2, u1) = 0.5 * b(2, j);
            k.Bu(2, u2) = 0.5 * b(1, j);
            k.Hu(0, u1) = b(3, j);
            k.Hu(1, u1) = b(4, j);
            k.Hu(2, u1) = b(5, j);
            k.Hu(3, u2) = b(3, j);
            k.Hu(4, u2) = b(4, j);
            k.Hu(5, u2) = b(5, j);
            k.Nphi(0, p) = b(0, j);
            k.Bphi(0, p) = b(1, j);
            k.Bphi(1, p) = b(2, j);
        }
    }
    return k;
}

inline KinematicMatrices kinematic_matrices(const Eigen::Vector3d& bary, const Triangle& tri) {
    return kinematic_matrices(bell_basis(bary, tri));
}

inline constexpr int kDefaultQuadratureDegree = 8;

using ElementMatrix = Eigen::Matrix<double, kElementDofs, kElementDofs>;
using ElementVector = Eigen::Matrix<double, kElementDofs, 1>;

/// Element stiffness for a generalized 11x11 law (micro constituent or
/// homogenized tangent). Block layout: [Kuu Kuphi; Kphiu Kphiphi].
inline ElementMatrix element_matrix(const BellElement& el, const Mat11& law, const QuadratureRule& rule) {
    ElementMatrix K = ElementMatrix::Zero();
    const double scale = 2.0 * el.triangle().area();
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto B = kinematic_matrices(el.eval_at(el.triangle().point(rule.points[q]))).generalized();
        const Eigen::Matrix<double, 11, kElementDofs> LB = law * B;
        K.noalias() += (rule.weights[q] * scale) * (B.transpose() * LB);
    }
    return 0.5 * (K + K.transpose());
}

struct ElementBlocks {
    Eigen::Matrix<double, 36, 36> Kuu;
    Eigen::Matrix<double, 36, 18> Kuphi;
    Eigen::Matrix<double, 18, 36> Kphiu;
    Eigen::Matrix<double, 18, 18> Kphiphi;
};

inline ElementBlocks element_matrices(const Triangle& tri, const MaterialMatrices& m,
                                      int quadratureDegree = kDefaultQuadratureDegree) {
    const BellElement el(tri);
    const ElementMatrix K = element_matrix(el, constitutive_matrix(m), triangle_quadrature(quadratureDegree));
    return {K.topLeftCorner<36, 36>(), K.topRightCorner<36, 18>(), K.bottomLeftCorner<18, 36>(),
            K.bottomRightCorner<18, 18>()};
}

/// Field values at one output point.
struct FieldPoint {
    Vec2 x = Vec2::Zero();
    Vec2 u = Vec2::Zero();
    double phi = 0.0;
    GeneralizedStrainState state;
    Vec3 sigma = Vec3::Zero();
    Vec6 tau = Vec6::Zero();
    Vec2 D = Vec2::Zero();
    Vec2 P = Vec2::Zero();
    double H = 0.0;

    Vec2 E() const { return -state.negE; }
};

/// Fields from an element-local solution vector (layout of local_u_dof / local_phi_dof).
inline FieldPoint element_fields(const BellElement& el, const ElementVector& ue, const Eigen::Vector3d& bary,
                                 const MaterialMatrices& m) {
    const auto k = kinematic_matrices(el.eval(bary));
    FieldPoint f;
    f.x = el.triangle().point(bary);
    f.u = k.Nu * ue.head<36>();
    f.phi = (k.Nphi * ue.tail<18>())(0);
    f.state = GeneralizedStrainState::from_stacked(k.generalized() * ue);
    f.sigma = stress(f.state, m);
    f.tau = higher_order_stress(f.state, m);
    f.D = electric_displacement(f.state, m);
    f.P = f.D - units::vacuum_permittivity * f.E();
    f.H = enthalpy_density(f.state, m);
    return f;
}

inline FieldPoint element_fields(const Triangle& tri, const ElementVector& ue, const Eigen::Vector3d& bary,
                                 const MaterialMatrices& m) {
    return element_fields(BellElement(tri), ue, bary, m);
}

/// Generalized stresses (sigma, tau, D) for a generalized law; used where only
/// the homogenized 11x11 tangent is available.
inline FieldPoint generalized_fields(const BellElement& el, const ElementVector& ue, const Eigen::Vector3d& bary,
                                     const Mat11& law) {
    const auto k = kinematic_matrices(el.eval(bary));
    FieldPoint f;
    f.x = el.triangle().point(bary);
    f.u = k.Nu * ue.head<36>();
    f.phi = (k.Nphi * ue.tail<18>())(0);
    const Vec11 s = k.generalized() * ue;
    f.state = GeneralizedStrainState::from_stacked(s);
    const Vec11 r = law * s;
    f.sigma = r.segment<3>(0);
    f.tau = r.segment<6>(3);
    f.D = r.segment<2>(9);
    f.P = f.D - units::vacuum_permittivity * f.E();
    f.H = 0.5 * s.dot(r);
    return f;
}

}  // namespace flexohom
