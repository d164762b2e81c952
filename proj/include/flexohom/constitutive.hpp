#pragma once

#include <Eigen/Dense>

#include "error.hpp"
#include "units.hpp"

namespace flexohom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec11 = Eigen::Matrix<double, 11, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat11 = Eigen::Matrix<double, 11, 11>;

/// Size of the generalized strain vector [eps(3); g(6); -E(2)].
inline constexpr int kGeneralizedSize = 11;

/// Isotropic flexoelectric material. Values are in the customary units:
/// lambda, G [GPa]; l [um]; e31, e33, e15 [C/m^2]; kappa11, kappa33 [nC/(V m)];
/// f1, f2 [uC/m]. Index 3 denotes the x2 (poling) direction of the 2D model.
struct MaterialParams {
    double lambda = 0.0;
    double G = 0.0;
    double l = 0.0;
    double e31 = 0.0;
    double e33 = 0.0;
    double e15 = 0.0;
    double kappa11 = 0.0;
    double kappa33 = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;

    bool operator==(const MaterialParams&) const = default;
};

/// Material used throughout the numerical studies (lambda, G, e, kappa, f).
inline MaterialParams reference_material(double intrinsicLength = 1.0) {
    return MaterialParams{179.0, 54.0, intrinsicLength, -2.7, 3.65, 21.3, 12.5, 14.4, 1.0, 1.0};
}

inline void validate(const MaterialParams& p) {
    if (!(p.G > 0.0)) throw MaterialError("shear modulus G must be positive");
    if (!(p.lambda + 2.0 * p.G > 0.0)) throw MaterialError("lambda + 2G must be positive");
    if (!(p.kappa11 > 0.0) || !(p.kappa33 > 0.0))
        throw MaterialError("dielectric constants kappa11, kappa33 must be positive");
    if (!(p.l >= 0.0)) throw MaterialError("intrinsic length l must be non-negative");
}

/// Constitutive matrices in internal units.
/// Voigt-like orderings: eps = (e11, e22, e12) with e12 unscaled,
/// g = (g111, g112, g122, g211, g212, g222), -E = (-E1, -E2).
struct MaterialMatrices {
    Mat3 C = Mat3::Zero();
    Mat6 Qbar = Mat6::Zero();
    Eigen::Matrix<double, 3, 2> eMat = Eigen::Matrix<double, 3, 2>::Zero();
    Eigen::Matrix<double, 2, 6> fMat = Eigen::Matrix<double, 2, 6>::Zero();
    Mat2 kappa = Mat2::Zero();
};

/// Strain-gradient matrix for unit intrinsic length.
inline Mat6 strain_gradient_matrix(double lambda, double G) {
    Mat6 Q;
    // clang-format off
    Q << lambda + 2 * G, 0,              0, 0, lambda,         0,
         0,              lambda + 3 * G, 0, G, 0,              lambda,
         0,              0,              G, 0, G,              0,
         0,              G,              0, G, 0,              0,
         lambda,         0,              G, 0, lambda + 3 * G, 0,
         0,              lambda,         0, 0, 0,              lambda + 2 * G;
    // clang-format on
    return Q;
}

inline MaterialMatrices build_material_matrices(const MaterialParams& p) {
    validate(p);
    MaterialMatrices m;
    const double lam = p.lambda * units::gigapascal;
    const double G = p.G * units::gigapascal;
    m.C << lam + 2 * G, lam, 0, lam, lam + 2 * G, 0, 0, 0, 4 * G;
    m.Qbar = (p.l * p.l) * strain_gradient_matrix(lam, G);

    const double e31 = p.e31 * units::coulomb_per_m2;
    const double e33 = p.e33 * units::coulomb_per_m2;
    const double e15 = p.e15 * units::coulomb_per_m2;
    // eMat^T = [[0, 0, 2 e15], [e31, e33, 0]]
    m.eMat << 0, e31, 0, e33, 2 * e15, 0;

    const double f1 = p.f1 * units::microcoulomb_per_metre;
    const double f2 = p.f2 * units::microcoulomb_per_metre;
    m.fMat << f1 + 2 * f2, 0, f1, 0, 2 * f2, 0,  //
        0, 2 * f2, 0, f1, 0, f1 + 2 * f2;

    m.kappa << p.kappa11 * units::nanocoulomb_per_volt_metre, 0, 0,
        p.kappa33 * units::nanocoulomb_per_volt_metre;
    return m;
}

/// Generalized strain state (eps, g, -E) at a point.
struct GeneralizedStrainState {
    Vec3 eps = Vec3::Zero();
    Vec6 g = Vec6::Zero();
    Vec2 negE = Vec2::Zero();

    Vec11 stacked() const {
        Vec11 v;
        v << eps, g, negE;
        return v;
    }
    static GeneralizedStrainState from_stacked(const Vec11& v) {
        return {v.segment<3>(0), v.segment<6>(3), v.segment<2>(9)};
    }
};

/// Pointwise 11x11 law in the (eps, g, -E) ordering; symmetric indefinite
/// with the -kappa block kept in the lower-right corner.
inline Mat11 constitutive_matrix(const MaterialMatrices& m) {
    Mat11 M = Mat11::Zero();
    M.block<3, 3>(0, 0) = m.C;
    M.block<3, 2>(0, 9) = m.eMat;
    M.block<2, 3>(9, 0) = m.eMat.transpose();
    M.block<6, 6>(3, 3) = m.Qbar;
    M.block<6, 2>(3, 9) = m.fMat.transpose();
    M.block<2, 6>(9, 3) = m.fMat;
    M.block<2, 2>(9, 9) = -m.kappa;
    return M;
}

/// sigma = C eps + eMat (-E). Third component is the conjugate of the unscaled e12.
inline Vec3 stress(const GeneralizedStrainState& s, const MaterialMatrices& m) {
    return m.C * s.eps + m.eMat * s.negE;
}

inline Vec6 higher_order_stress(const GeneralizedStrainState& s, const MaterialMatrices& m) {
    return m.Qbar * s.g + m.fMat.transpose() * s.negE;
}

/// D = dH/d(-E) = eMat^T eps + fMat g - kappa (-E), i.e. D = kappa E + e eps + f g.
inline Vec2 electric_displacement(const GeneralizedStrainState& s, const MaterialMatrices& m) {
    return m.eMat.transpose() * s.eps + m.fMat * s.g - m.kappa * s.negE;
}

/// Electrical enthalpy density.
inline double enthalpy_density(const GeneralizedStrainState& s, const MaterialMatrices& m) {
    return 0.5 * s.eps.dot(m.C * s.eps) + 0.5 * s.g.dot(m.Qbar * s.g) + s.eps.dot(m.eMat * s.negE) +
           s.g.dot(m.fMat.transpose() * s.negE) - 0.5 * s.negE.dot(m.kappa * s.negE);
}

/// Conversion to the internal-energy (polarization based) description.
/// Units follow the inputs: chi, kappa in nC/(V m), alpha in (V m)/nC.
struct ReciprocalForm {
    Mat2 chi = Mat2::Zero();
    Mat2 alpha = Mat2::Zero();

    /// d = alpha e, with e given as the 2x3 (E-index first) piezoelectric block.
    Eigen::Matrix<double, 2, 3> piezo_d(const Eigen::Matrix<double, 2, 3>& eT) const { return alpha * eT; }
    /// h = alpha mu, with mu given in the same 2x6 layout as fMat.
    Eigen::Matrix<double, 2, 6> flexo_h(const Eigen::Matrix<double, 2, 6>& mu) const { return alpha * mu; }
};

inline ReciprocalForm reciprocal_form(const MaterialParams& p, double vacuumPermittivity) {
    if (!(p.kappa11 > vacuumPermittivity) || !(p.kappa33 > vacuumPermittivity))
        throw MaterialError("dielectric constants must exceed the vacuum permittivity");
    ReciprocalForm r;
    r.chi << p.kappa11 - vacuumPermittivity, 0, 0, p.kappa33 - vacuumPermittivity;
    r.alpha << 1.0 / r.chi(0, 0), 0, 0, 1.0 / r.chi(1, 1);
    return r;
}

}  // namespace flexohom
