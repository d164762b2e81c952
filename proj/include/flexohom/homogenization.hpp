#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "bell.hpp"
#include "constitutive.hpp"
#include "error.hpp"
#include "mesh.hpp"
#include "rve_bc.hpp"
#include "units.hpp"

namespace flexohom {

enum class BoundaryCondition { Periodic, Dirichlet };

inline std::string to_string(BoundaryCondition bc) { return bc == BoundaryCondition::Periodic ? "PBC" : "DBC"; }

inline BoundaryCondition parse_boundary_condition(const std::string& s) {
    if (s == "PBC" || s == "pbc" || s == "periodic") return BoundaryCondition::Periodic;
    if (s == "DBC" || s == "dbc" || s == "dirichlet") return BoundaryCondition::Dirichlet;
    throw ConfigError("unknown boundary condition '" + s + "' (expected PBC or DBC)");
}

/// Contribution of a constant stress to the homogenized higher-order stress:
/// tau_M += G(x) sigma, with sigma in the (s11, s22, 2 s12) conjugate layout.
/// G(x)^T maps g_M to the strain of the macro polynomial at x.
inline Eigen::Matrix<double, 6, 3> moment_matrix(const Vec2& x) {
    Eigen::Matrix<double, 6, 3> G;
    // clang-format off
    G << x.x(), 0,     0,
         x.y(), 0,     0.5 * x.x(),
         0,     0,     0.5 * x.y(),
         0,     0,     0.5 * x.x(),
         0,     x.x(), 0.5 * x.y(),
         0,     x.y(), 0;
    // clang-format on
    return G;
}

/// Generalized macro strain recovered from outer-boundary integrals of a
/// field, together with the boundary moments of its fluctuation.
struct BoundaryMoments {
    /// (1/|box|) oint u (x) n: 2x2, row i = component, col j = normal direction
    Mat2 un = Mat2::Zero();
    /// (1/|box|) oint grad u (x) n: entry [i][j][k] = u_i,j n_k, flattened i*4 + j*2 + k
    Eigen::Matrix<double, 8, 1> gradun = Eigen::Matrix<double, 8, 1>::Zero();
    /// (1/|box|) oint phi n
    Vec2 phin = Vec2::Zero();
};

/// Volume averages over the meshed area for one or more nodal fields (columns of U).
struct GeneralizedAverages {
    /// 11 x cols: (sigma_M, tau_M, D_M), tau_M including the sigma (x) x moment
    Eigen::MatrixXd stress;
    /// 11 x cols: averages of (eps, g, -grad phi)
    Eigen::MatrixXd strain;
    /// (1/V) int s_i^T law s_j over column pairs
    Eigen::MatrixXd energy;
    /// diagonal of energy
    Eigen::VectorXd work;
};

/// The mesh must be centered (centroid at the origin) for the moment term.
inline GeneralizedAverages average_generalized(const Mesh& mesh, const RegionLaws& laws, const Eigen::MatrixXd& U,
                                               int quadratureDegree = kDefaultQuadratureDegree, int threads = 1,
                                               double volume = 0.0) {
    if (volume <= 0.0) volume = mesh.area();
    if (mesh.centroid().norm() > 1e-10 * mesh.bbox().diagonal())
        throw MeshError("averaging needs a mesh centered at its centroid");
    if (U.rows() != static_cast<Eigen::Index>(mesh.num_nodes()) * kDofsPerNode)
        throw SolverError("field vector does not match the mesh");
    const int cols = static_cast<int>(U.cols());
    const std::size_t ne = mesh.num_triangles();
    const QuadratureRule rule = triangle_quadrature(quadratureDegree);
    std::vector<Eigen::MatrixXd> st(ne), sn(ne);
    std::vector<Eigen::MatrixXd> wk(ne);
    detail::parallel_for(0, ne, threads, [&](std::size_t e) {
        const BellElement el(mesh.triangle(e));
        const auto g = element_dofs(mesh.triangles[e]);
        Eigen::MatrixXd Ue(kElementDofs, cols);
        for (int i = 0; i < kElementDofs; ++i) Ue.row(i) = U.row(g[i]);
        const Mat11& law = laws.at(mesh.regionOf[e]);
        const double scale = 2.0 * el.triangle().area();
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(11, cols), N = Eigen::MatrixXd::Zero(11, cols);
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(cols, cols);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2 x = el.triangle().point(rule.points[q]);
            const auto B = kinematic_matrices(el.eval_at(x)).generalized();
            const Eigen::MatrixXd s = B * Ue;
            Eigen::MatrixXd r = law * s;
            const double w = rule.weights[q] * scale;
            W.noalias() += w * s.transpose() * r;
            r.middleRows<6>(3) += moment_matrix(x) * r.topRows<3>();
            S += w * r;
            N += w * s;
        }
        st[e] = std::move(S);
        sn[e] = std::move(N);
        wk[e] = std::move(W);
    });
    GeneralizedAverages a;
    a.stress = Eigen::MatrixXd::Zero(11, cols);
    a.strain = Eigen::MatrixXd::Zero(11, cols);
    a.energy = Eigen::MatrixXd::Zero(cols, cols);
    for (std::size_t e = 0; e < ne; ++e) {
        a.stress += st[e];
        a.strain += sn[e];
        a.energy += wk[e];
    }
    a.stress /= volume;
    a.strain /= volume;
    a.energy /= volume;
    a.work = a.energy.diagonal();
    return a;
}

struct RveResult {
    MacroState macro;
    Eigen::VectorXd solution;
    Vec3 sigmaM = Vec3::Zero();
    Vec6 tauM = Vec6::Zero();
    Vec2 DM = Vec2::Zero();
    /// (1/V) int (sigma:eps + tau:g - D.E) dv
    double microEnergy = 0.0;
    double residual = 0.0;

    Vec11 generalized_stress() const {
        Vec11 v;
        v << sigmaM, tauM, DM;
        return v;
    }
};

/// 11x11 generalized effective tangent, ordering [eps(3); g(6); -E(2)] for the
/// columns and (sigma, tau, D) for the rows.
struct EffectiveTangents {
    Mat11 Cbig = Mat11::Zero();

    Mat3 CsigEps() const { return Cbig.block<3, 3>(0, 0); }
    Eigen::Matrix<double, 3, 6> CsigG() const { return Cbig.block<3, 6>(0, 3); }
    Eigen::Matrix<double, 3, 2> CsigE() const { return Cbig.block<3, 2>(0, 9); }
    Eigen::Matrix<double, 6, 3> CtauEps() const { return Cbig.block<6, 3>(3, 0); }
    Mat6 CtauG() const { return Cbig.block<6, 6>(3, 3); }
    Eigen::Matrix<double, 6, 2> CtauE() const { return Cbig.block<6, 2>(3, 9); }
    Eigen::Matrix<double, 2, 3> CDeps() const { return Cbig.block<2, 3>(9, 0); }
    Eigen::Matrix<double, 2, 6> CDg() const { return Cbig.block<2, 6>(9, 3); }
    Mat2 CDE() const { return Cbig.block<2, 2>(9, 9); }

    /// Largest relative violation of Cbig = Cbig^T (covers the three block-transpose relations).
    double symmetry_defect() const {
        double worst = 0.0;
        for (int i = 0; i < 11; ++i)
            for (int j = i + 1; j < 11; ++j) {
                const double scale = std::sqrt(std::abs(Cbig(i, i) * Cbig(j, j)));
                const double d = std::abs(Cbig(i, j) - Cbig(j, i));
                if (scale > 0.0) worst = std::max(worst, d / scale);
                else if (d > 0.0) worst = std::max(worst, 1.0);
            }
        return worst;
    }
};

struct RveOptions {
    BoundaryCondition bc = BoundaryCondition::Periodic;
    AssemblyOptions assembly;
    SolverOptions solver;
    double pairingTolerance = kDefaultPairingTolerance;
    /// shift the mesh so its centroid is at the origin
    bool center = true;
};

inline constexpr double kEnergyFloor = 1e-30;

/// RVE with assembled system and one factorization; all macro load cases
/// are linear combinations of the 11 unit-case solutions.
class RveProblem {
public:
    RveProblem(Mesh mesh, std::map<int, MaterialMatrices> materials, RveOptions opt = {})
        : mesh_(opt.center ? center_at_centroid(mesh) : std::move(mesh)), materials_(std::move(materials)), opt_(opt) {
        validate_mesh(mesh_);
        for (const auto& [tag, name] : mesh_.regions)
            if (!materials_.count(tag)) throw MaterialError("no material for region '" + name + "'");
        laws_ = region_laws(materials_);
        volume_ = mesh_.area();
        const BBox b = mesh_.bbox();
        boxArea_ = b.width() * b.height();
        boxCenter_ = 0.5 * (b.lo + b.hi);
        if ((mesh_.centroid()).norm() > 1e-10 * b.diagonal())
            throw MeshError("RVE mesh is not centered at its centroid");
        bsets_ = classify_boundary(mesh_, opt_.pairingTolerance);
        const int ndof = static_cast<int>(mesh_.num_nodes()) * kDofsPerNode;
        if (opt_.bc == BoundaryCondition::Periodic) {
            pairs_ = pair_periodic_nodes(mesh_, bsets_, opt_.pairingTolerance);
            constraints_ = build_pbc(mesh_, bsets_, pairs_);
        } else {
            constraints_ = build_dbc(mesh_, bsets_);
        }
        reduction_ = eliminate(constraints_, ndof);
        system_ = assemble(mesh_, laws_, opt_.assembly);
        outerEdges_ = find_outer_edges();
    }

    const Mesh& mesh() const { return mesh_; }
    const std::map<int, MaterialMatrices>& materials() const { return materials_; }
    const RveOptions& options() const { return opt_; }
    const BoundarySets& boundary() const { return bsets_; }
    const ConstraintSet& constraints() const { return constraints_; }
    const AffineReduction& reduction() const { return reduction_; }
    const GlobalSystem& system() const { return system_; }
    /// meshed area
    double volume() const { return volume_; }
    int factorization_count() const { return factorizations_; }

    /// Full-space solutions of the 11 unit macro cases (ndof x 11), computed once.
    const Eigen::MatrixXd& unit_solutions() const {
        std::call_once(*solvedFlag_, [&] {
            const ReducedSolver solver(system_, reduction_, opt_.solver);
            ++factorizations_;
            // the macro polynomial satisfies every constraint: solve for the fluctuation only
            const Eigen::MatrixXd lift = macro_polynomial_dofs(mesh_);
            auto sol = solver.solve(system_, &lift);
            unit_ = std::move(sol.U);
            unitResidual_ = sol.residual;
        });
        return unit_;
    }
    double unit_residual() const {
        unit_solutions();
        return unitResidual_;
    }

    RveResult run(const MacroState& macro) const {
        RveResult r;
        r.macro = macro;
        const Eigen::VectorXd m = macro.stacked();
        r.solution = unit_solutions() * m;
        const GeneralizedAverages& a = unit_averages();
        const Eigen::VectorXd stress = a.stress * m;
        r.sigmaM = stress.segment<3>(0);
        r.tauM = stress.segment<6>(3);
        r.DM = stress.segment<2>(9);
        r.microEnergy = m.dot(a.energy * m);
        r.residual = unitResidual_;
        return r;
    }

    /// Same as run(), with the averages integrated from the combined micro field
    /// itself instead of combined from the unit cases. Used for audits.
    RveResult run_averaged(const MacroState& macro) const {
        RveResult r;
        r.macro = macro;
        r.solution = unit_solutions() * macro.stacked();
        const GeneralizedAverages a = averages(r.solution);
        r.sigmaM = a.stress.col(0).segment<3>(0);
        r.tauM = a.stress.col(0).segment<6>(3);
        r.DM = a.stress.col(0).segment<2>(9);
        r.microEnergy = a.work[0];
        r.residual = unitResidual_;
        return r;
    }

    EffectiveTangents tangents() const {
        const GeneralizedAverages& a = unit_averages();
        EffectiveTangents t;
        t.Cbig = a.stress;
        return t;
    }

    /// |microEnergy - macro work| / max(|microEnergy|, floor).
    static double hill_mandel_gap(const RveResult& r) {
        const double macroWork = r.generalized_stress().dot(r.macro.stacked());
        return std::abs(r.microEnergy - macroWork) / std::max(std::abs(r.microEnergy), kEnergyFloor);
    }

    /// Volume averages of the micro generalized strain (eps, g, -grad phi).
    /// Equal to the macro state for hole-free RVEs; with holes use recovered_macro_state.
    MacroState volume_average_state(const Eigen::VectorXd& u) const {
        return MacroState::from_stacked(averages(u).strain.col(0));
    }

    /// Macro state recovered from outer-boundary integrals (valid with holes).
    MacroState recovered_macro_state(const Eigen::VectorXd& u) const {
        const BoundaryMoments m = boundary_moments(u);
        MacroState s;
        auto G = [&](int i, int j, int k) { return m.gradun[i * 4 + j * 2 + k]; };
        // g_ijk = u_i,jk; both orderings of the trailing pair are averaged
        s.g << G(0, 0, 0), 0.5 * (G(0, 0, 1) + G(0, 1, 0)), G(0, 1, 1), G(1, 0, 0), 0.5 * (G(1, 0, 1) + G(1, 1, 0)),
            G(1, 1, 1);
        // grad u averaged over the box = eps_M (+ rotation) + g_M . x_box
        const Vec3 fromG = moment_matrix(boxCenter_).transpose() * s.g;
        s.eps << m.un(0, 0) - fromG[0], m.un(1, 1) - fromG[1], 0.5 * (m.un(0, 1) + m.un(1, 0)) - fromG[2];
        s.negE = m.phin;
        return s;
    }

    /// Outer-boundary moments of a nodal field (per unit box area).
    BoundaryMoments boundary_moments(const Eigen::VectorXd& u) const {
        BoundaryMoments m;
        std::vector<double> gx, gw;
        gauss_legendre_01(4, gx, gw);
        for (const auto& e : outerEdges_) {
            const BellElement el(mesh_.triangle(e.element));
            ElementVector ue = gather(u, e.element);
            const Vec2 a = mesh_.nodes[mesh_.triangles[e.element][e.local]];
            const Vec2 b = mesh_.nodes[mesh_.triangles[e.element][(e.local + 1) % 3]];
            const double len = (b - a).norm();
            for (std::size_t q = 0; q < gx.size(); ++q) {
                Eigen::Vector3d bary = Eigen::Vector3d::Zero();
                bary[e.local] = 1.0 - gx[q];
                bary[(e.local + 1) % 3] = gx[q];
                const BellBasisEval B = el.eval(bary);
                const auto k = kinematic_matrices(B);
                const Vec2 uu = k.Nu * ue.head<36>();
                const double phi = (k.Nphi * ue.tail<18>())(0);
                Mat2 grad;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) {
                        double v = 0.0;
                        for (int n = 0; n < 3; ++n)
                            for (int d = 0; d < 6; ++d) v += B(1 + j, 6 * n + d) * ue[local_u_dof(n, i, d)];
                        grad(i, j) = v;
                    }
                const double w = gw[q] * len / boxArea_;
                m.un += w * uu * e.normal.transpose();
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        for (int kk = 0; kk < 2; ++kk) m.gradun[i * 4 + j * 2 + kk] += w * grad(i, j) * e.normal[kk];
                m.phin += w * phi * e.normal;
            }
        }
        return m;
    }

    /// Size of the fluctuation u - u_macro relative to u, both measured in the
    /// stiffness-weighted dof norm ||sqrt|diag K| .* v||. The weighting makes
    /// displacement, potential and derivative dofs commensurable.
    double relative_fluctuation(const RveResult& r) const {
        const Eigen::VectorXd S = system_.K.diagonal().cwiseAbs().cwiseSqrt();
        const Eigen::VectorXd w = r.solution - macro_polynomial(r.macro);
        const double den = S.cwiseProduct(r.solution).norm();
        return den > 0.0 ? S.cwiseProduct(w).norm() / den : 0.0;
    }

    /// Nodal vector of the macro polynomial for a macro state.
    Eigen::VectorXd macro_polynomial(const MacroState& s) const {
        Eigen::VectorXd v(mesh_.num_nodes() * kDofsPerNode);
        for (std::size_t i = 0; i < mesh_.num_nodes(); ++i)
            v.segment<kDofsPerNode>(i * kDofsPerNode) = macro_node_matrix(mesh_.nodes[i]) * s.stacked();
        return v;
    }

    /// Field values at every element vertex (three output points per element).
    std::vector<FieldPoint> vertex_fields(const Eigen::VectorXd& u) const {
        std::vector<FieldPoint> out;
        out.reserve(3 * mesh_.num_triangles());
        for (std::size_t e = 0; e < mesh_.num_triangles(); ++e) {
            const BellElement el(mesh_.triangle(e));
            const ElementVector ue = gather(u, e);
            for (int i = 0; i < 3; ++i) {
                Eigen::Vector3d bary = Eigen::Vector3d::Zero();
                bary[i] = 1.0;
                out.push_back(element_fields(el, ue, bary, materials_.at(mesh_.regionOf[e])));
            }
        }
        return out;
    }

    ElementVector gather(const Eigen::VectorXd& u, std::size_t e) const {
        const auto g = element_dofs(mesh_.triangles[e]);
        ElementVector ue;
        for (int i = 0; i < kElementDofs; ++i) ue[i] = u[g[i]];
        return ue;
    }

    /// Averages of the 11 unit-case solutions, computed once.
    const GeneralizedAverages& unit_averages() const {
        const Eigen::MatrixXd& U = unit_solutions();
        std::call_once(*averagedFlag_, [&] { unitAverages_ = averages(U); });
        return unitAverages_;
    }

private:
    GeneralizedAverages averages(const Eigen::MatrixXd& U) const {
        return average_generalized(mesh_, laws_, U, opt_.assembly.quadratureDegree, opt_.assembly.threads, volume_);
    }

    struct OuterEdge {
        std::size_t element;
        int local;  // edge from local vertex `local` to `local + 1`
        Vec2 normal;
    };

    std::vector<OuterEdge> find_outer_edges() const {
        const BBox b = mesh_.bbox();
        const double tol = opt_.pairingTolerance * std::max(b.width(), b.height());
        std::vector<OuterEdge> out;
        for (std::size_t e = 0; e < mesh_.num_triangles(); ++e)
            for (int k = 0; k < 3; ++k) {
                const Vec2& p = mesh_.nodes[mesh_.triangles[e][k]];
                const Vec2& q = mesh_.nodes[mesh_.triangles[e][(k + 1) % 3]];
                if (std::abs(p.x() - b.lo.x()) <= tol && std::abs(q.x() - b.lo.x()) <= tol) out.push_back({e, k, {-1, 0}});
                if (std::abs(p.x() - b.hi.x()) <= tol && std::abs(q.x() - b.hi.x()) <= tol) out.push_back({e, k, {1, 0}});
                if (std::abs(p.y() - b.lo.y()) <= tol && std::abs(q.y() - b.lo.y()) <= tol) out.push_back({e, k, {0, -1}});
                if (std::abs(p.y() - b.hi.y()) <= tol && std::abs(q.y() - b.hi.y()) <= tol) out.push_back({e, k, {0, 1}});
            }
        return out;
    }

    Mesh mesh_;
    std::map<int, MaterialMatrices> materials_;
    RveOptions opt_;
    RegionLaws laws_;
    double volume_ = 0.0;
    double boxArea_ = 0.0;
    Vec2 boxCenter_ = Vec2::Zero();
    BoundarySets bsets_;
    PeriodicPairs pairs_;
    ConstraintSet constraints_;
    AffineReduction reduction_;
    GlobalSystem system_;
    std::vector<OuterEdge> outerEdges_;

    std::unique_ptr<std::once_flag> solvedFlag_ = std::make_unique<std::once_flag>();
    mutable Eigen::MatrixXd unit_;
    std::unique_ptr<std::once_flag> averagedFlag_ = std::make_unique<std::once_flag>();
    mutable GeneralizedAverages unitAverages_;
    mutable double unitResidual_ = 0.0;
    mutable int factorizations_ = 0;
};

/// Single-macro-state convenience wrapper.
inline RveResult run_rve_case(const Mesh& mesh, const std::map<int, MaterialMatrices>& materials,
                              const MacroState& macro, BoundaryCondition bc) {
    RveOptions opt;
    opt.bc = bc;
    return RveProblem(mesh, materials, opt).run(macro);
}

inline EffectiveTangents effective_tangents(const Mesh& mesh, const std::map<int, MaterialMatrices>& materials,
                                            BoundaryCondition bc, const AssemblyOptions& assembly = {}) {
    RveOptions opt;
    opt.bc = bc;
    opt.assembly = assembly;
    return RveProblem(mesh, materials, opt).tangents();
}

inline double hill_mandel_gap(const RveResult& r) { return RveProblem::hill_mandel_gap(r); }

/// Named effective coefficients in customary units (GPa, C/m^2, nC/(V m), uC/m):
///   C11, C33     CsigEps diagonal entries (1,1) and (3,3)
///   e11 .. e23   CDeps, E-index first
///   k11, k33     dielectric constants; the tangent stores -kappa in its D-E block
///   f11 .. f26   CDg, E-index first, g in (111, 112, 122, 211, 212, 222) order
inline const std::vector<std::string>& coefficient_labels() {
    static const std::vector<std::string> labels = {"C11", "C33", "e11", "e12", "e13", "e21", "e22", "e23",
                                                    "k11", "k33", "f11", "f12", "f13", "f14", "f15", "f16",
                                                    "f21", "f22", "f23", "f24", "f25", "f26"};
    return labels;
}

inline Eigen::VectorXd reported_coefficients(const Mat11& Cbig) {
    Eigen::VectorXd v(coefficient_labels().size());
    int k = 0;
    v[k++] = Cbig(0, 0) / units::gigapascal;
    v[k++] = Cbig(2, 2) / units::gigapascal;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) v[k++] = Cbig(9 + i, j) / units::coulomb_per_m2;
    v[k++] = -Cbig(9, 9) / units::nanocoulomb_per_volt_metre;
    v[k++] = -Cbig(10, 10) / units::nanocoulomb_per_volt_metre;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 6; ++j) v[k++] = Cbig(9 + i, 3 + j) / units::microcoulomb_per_metre;
    return v;
}

inline Eigen::VectorXd reported_coefficients(const EffectiveTangents& t) { return reported_coefficients(t.Cbig); }

/// The same coefficients for a bulk material, used as normalization reference.
inline Eigen::VectorXd reference_coefficients(const MaterialMatrices& m) {
    return reported_coefficients(constitutive_matrix(m));
}

/// value / reference where the reference is nonzero; NaN elsewhere.
inline Eigen::VectorXd normalized_coefficients(const Eigen::VectorXd& values, const Eigen::VectorXd& reference) {
    Eigen::VectorXd n(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        n[i] = reference[i] != 0.0 ? values[i] / reference[i] : std::numeric_limits<double>::quiet_NaN();
    return n;
}

}  // namespace flexohom
